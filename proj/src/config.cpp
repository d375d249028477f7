#include "mpmsim/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mpmsim/errors.hpp"

namespace mpmsim {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& why) {
  fail(ErrorCode::ConfigError, key + ": " + why);
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    config_error(path + key, e.what());
  }
}

Index3 read_index3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) config_error(path, "expected [i, j, k]");
  try {
    return {v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
  } catch (const json::exception& e) {
    config_error(path, e.what());
  }
}

json index3_json(Index3 c) { return json::array({c.i, c.j, c.k}); }

std::string boundary_name(BoundaryKind b) {
  return b == BoundaryKind::DirichletFarField ? "dirichlet_far_field" : "neumann_zero";
}

BoundaryKind parse_boundary(const std::string& s, const std::string& path) {
  if (s == "dirichlet_far_field") return BoundaryKind::DirichletFarField;
  if (s == "neumann_zero") return BoundaryKind::NeumannZero;
  config_error(path, "unknown boundary '" + s + "' (dirichlet_far_field | neumann_zero)");
}

void read_object(const json& root, const char* key, const std::string& path, auto&& fn) {
  auto it = root.find(key);
  if (it == root.end() || it->is_null()) return;
  if (!it->is_object()) config_error(path + key, "expected an object");
  fn(*it, path + key + ".");
}

}  // namespace

void SimConfig::validate() const {
  auto check = [](bool ok, const char* key, const char* why) {
    if (!ok) config_error(key, why);
  };
  check(dims.i >= 1 && dims.j >= 1 && dims.k >= 1, "lattice.dims", "must be positive");
  check(h > 0.0, "lattice.h", "must be positive");
  if (!mask_file) {
    check(pleura.inner_radius > 0.0 && pleura.inner_radius < pleura.outer_radius, "mask.synthetic",
          "need 0 < inner_radius < outer_radius");
  }
  check(seed.n_cells >= 1, "seed.n_cells", "must be >= 1");
  check(seed.region.valid(), "seed.region", "lo must not exceed hi");
  check(dt > 0.0, "dt", "must be positive");
  check(pde_interval >= 1, "pde_interval", "must be >= 1");
  check(margin >= 0, "margin", "must be >= 0");
  check(retrack_interval >= 1, "retrack_interval", "must be >= 1");
  check(workers >= 1, "workers", "must be >= 1");
  check(total_mcs >= 0, "total_mcs", "must be >= 0");
  check(snapshot_interval >= 1, "snapshot_interval", "must be >= 1");
  check(outside_mask_diffusivity_scale > 0.0, "outside_mask_diffusivity_scale", "must be positive");
  try {
    cpm.validate();
    for (const auto& t : transport) t.validate();
    gmres.validate();
  } catch (const Error& e) {
    config_error("config", e.what());
  }
}

SimConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error("config", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) config_error("config", "top level must be an object");

  SimConfig cfg;
  read_object(root, "lattice", "", [&](const json& o, const std::string& p) {
    if (o.contains("dims")) cfg.dims = read_index3(o["dims"], p + "dims");
    read(o, "h", cfg.h, p);
  });
  read_object(root, "mask", "", [&](const json& o, const std::string& p) {
    if (o.contains("file") && !o["file"].is_null()) cfg.mask_file = o["file"].get<std::string>();
    read_object(o, "synthetic", p, [&](const json& s, const std::string& q) {
      read(s, "inner_radius", cfg.pleura.inner_radius, q);
      read(s, "outer_radius", cfg.pleura.outer_radius, q);
      if (s.contains("center") && !s["center"].is_null()) {
        std::array<double, 3> c{};
        read(s, "center", c, q);
        cfg.pleura.center = c;
      }
    });
  });
  read_object(root, "seed", "", [&](const json& o, const std::string& p) {
    if (o.contains("region_lo")) cfg.seed.region.lo = read_index3(o["region_lo"], p + "region_lo");
    if (o.contains("region_hi")) cfg.seed.region.hi = read_index3(o["region_hi"], p + "region_hi");
    read(o, "n_cells", cfg.seed.n_cells, p);
    if (o.contains("rng_seed") && !o["rng_seed"].is_null()) {
      std::uint64_t s = 0;
      read(o, "rng_seed", s, p);
      cfg.seed.rng_seed = s;
    }
  });
  read_object(root, "cpm", "", [&](const json& o, const std::string& p) {
    auto& c = cfg.cpm;
    read(o, "j_tumour_tumour", c.j_tumour_tumour, p);
    read(o, "j_tumour_medium", c.j_tumour_medium, p);
    read(o, "j_medium_medium", c.j_medium_medium, p);
    read(o, "lambda_volume", c.lambda_volume, p);
    read(o, "temperature", c.temperature, p);
    read(o, "growth_rate", c.growth_rate, p);
    read(o, "initial_target_volume", c.initial_target_volume, p);
    read(o, "mitosis_volume", c.mitosis_volume, p);
    read(o, "uptake_oxygen", c.uptake_oxygen, p);
    read(o, "uptake_nutrient", c.uptake_nutrient, p);
    read(o, "secretion_il6", c.secretion_il6, p);
    read(o, "secretion_il8", c.secretion_il8, p);
    read(o, "hypoxia_threshold", c.hypoxia_threshold, p);
  });
  read_object(root, "transport", "", [&](const json& o, const std::string& p) {
    for (auto s : kAllSpecies) {
      read_object(o, std::string(species_name(s)).c_str(), p, [&](const json& t, const std::string& q) {
        auto& tp = cfg.transport[static_cast<std::size_t>(s)];
        read(t, "diffusivity", tp.diffusivity, q);
        read(t, "decay_rate", tp.decay_rate, q);
        read(t, "far_field", tp.far_field, q);
        if (t.contains("boundary")) tp.boundary = parse_boundary(t["boundary"].get<std::string>(), q + "boundary");
      });
    }
  });
  read_object(root, "gmres", "", [&](const json& o, const std::string& p) {
    read(o, "rel_tol", cfg.gmres.rel_tol, p);
    read(o, "abs_tol", cfg.gmres.abs_tol, p);
    read(o, "restart", cfg.gmres.restart, p);
    read(o, "max_iters", cfg.gmres.max_iters, p);
    if (o.contains("precondition")) {
      auto s = o["precondition"].get<std::string>();
      if (s == "jacobi") {
        cfg.gmres.precondition = Preconditioner::Jacobi;
      } else if (s == "none") {
        cfg.gmres.precondition = Preconditioner::None;
      } else {
        config_error(p + "precondition", "expected 'none' or 'jacobi'");
      }
    }
  });
  read(root, "outside_mask_diffusivity_scale", cfg.outside_mask_diffusivity_scale, "");
  read(root, "dt", cfg.dt, "");
  read(root, "pde_interval", cfg.pde_interval, "");
  read(root, "margin", cfg.margin, "");
  read(root, "retrack_interval", cfg.retrack_interval, "");
  read(root, "workers", cfg.workers, "");
  read(root, "total_mcs", cfg.total_mcs, "");
  read(root, "snapshot_interval", cfg.snapshot_interval, "");
  read(root, "rng_seed", cfg.rng_seed, "");
  if (root.contains("handoff_mode")) {
    auto s = root["handoff_mode"].get<std::string>();
    if (s == "in_process") {
      cfg.handoff_mode = HandoffMode::InProcess;
    } else if (s == "shared_file") {
      cfg.handoff_mode = HandoffMode::SharedFile;
    } else {
      config_error("handoff_mode", "expected 'in_process' or 'shared_file'");
    }
  }
  cfg.validate();
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const SimConfig& cfg) {
  json root;
  root["lattice"] = {{"dims", index3_json(cfg.dims)}, {"h", cfg.h}};
  json synthetic = {{"inner_radius", cfg.pleura.inner_radius}, {"outer_radius", cfg.pleura.outer_radius}};
  synthetic["center"] = cfg.pleura.center ? json(*cfg.pleura.center) : json(nullptr);
  root["mask"] = {{"file", cfg.mask_file ? json(cfg.mask_file->string()) : json(nullptr)},
                  {"synthetic", synthetic}};
  root["seed"] = {{"region_lo", index3_json(cfg.seed.region.lo)},
                  {"region_hi", index3_json(cfg.seed.region.hi)},
                  {"n_cells", cfg.seed.n_cells},
                  {"rng_seed", cfg.seed.rng_seed ? json(*cfg.seed.rng_seed) : json(nullptr)}};
  const auto& c = cfg.cpm;
  root["cpm"] = {{"j_tumour_tumour", c.j_tumour_tumour},
                 {"j_tumour_medium", c.j_tumour_medium},
                 {"j_medium_medium", c.j_medium_medium},
                 {"lambda_volume", c.lambda_volume},
                 {"temperature", c.temperature},
                 {"growth_rate", c.growth_rate},
                 {"initial_target_volume", c.initial_target_volume},
                 {"mitosis_volume", c.mitosis_volume},
                 {"uptake_oxygen", c.uptake_oxygen},
                 {"uptake_nutrient", c.uptake_nutrient},
                 {"secretion_il6", c.secretion_il6},
                 {"secretion_il8", c.secretion_il8},
                 {"hypoxia_threshold", c.hypoxia_threshold}};
  json transport = json::object();
  for (auto s : kAllSpecies) {
    const auto& tp = cfg.transport[static_cast<std::size_t>(s)];
    transport[std::string(species_name(s))] = {{"diffusivity", tp.diffusivity},
                                               {"decay_rate", tp.decay_rate},
                                               {"far_field", tp.far_field},
                                               {"boundary", boundary_name(tp.boundary)}};
  }
  root["transport"] = transport;
  root["gmres"] = {{"rel_tol", cfg.gmres.rel_tol},
                   {"abs_tol", cfg.gmres.abs_tol},
                   {"restart", cfg.gmres.restart},
                   {"max_iters", cfg.gmres.max_iters},
                   {"precondition", cfg.gmres.precondition == Preconditioner::Jacobi ? "jacobi" : "none"}};
  root["outside_mask_diffusivity_scale"] = cfg.outside_mask_diffusivity_scale;
  root["dt"] = cfg.dt;
  root["pde_interval"] = cfg.pde_interval;
  root["margin"] = cfg.margin;
  root["retrack_interval"] = cfg.retrack_interval;
  root["workers"] = cfg.workers;
  root["total_mcs"] = cfg.total_mcs;
  root["snapshot_interval"] = cfg.snapshot_interval;
  root["rng_seed"] = cfg.rng_seed;
  root["handoff_mode"] = cfg.handoff_mode == HandoffMode::SharedFile ? "shared_file" : "in_process";
  return root.dump(2);
}

}  // namespace mpmsim
