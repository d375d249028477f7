#include "mpmsim/handoff.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "json.hpp"
#include "mpmsim/errors.hpp"

namespace mpmsim {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "mpmsim-handoff";
constexpr int kVersion = 1;

json index_json(Index3 c) { return json::array({c.i, c.j, c.k}); }

Index3 index_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

void write_le(std::ostream& out, const std::vector<double>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      out.write(b, 8);
    }
  }
}

std::vector<double> read_le(std::istream& in, std::size_t n) {
  std::vector<double> values(n);
  std::vector<unsigned char> raw(n * sizeof(double));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) return {};
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | raw[i * 8 + static_cast<std::size_t>(b)];
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

std::string input_name(const char* role, Species s) { return std::string(role) + "_" + std::string(species_name(s)); }

}  // namespace

const std::vector<double>& HandoffFile::array(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorCode::IoFailure, "handoff file has no array '" + name + "'");
  return arrays[static_cast<std::size_t>(it - names.begin())];
}

void write_handoff(const std::filesystem::path& path, const HandoffFile& file) {
  if (file.names.size() != file.arrays.size()) fail(ErrorCode::InvalidArgument, "handoff names/arrays mismatch");
  const auto n = file.lattice.size();
  for (const auto& a : file.arrays) {
    if (a.size() != n) fail(ErrorCode::DimMismatch, "handoff array size does not match its lattice");
  }
  if (file.mask && file.mask->size() != n) fail(ErrorCode::DimMismatch, "handoff mask size does not match");

  const auto d = file.lattice.dims();
  json header = {
      {"format", kFormat},
      {"version", kVersion},
      {"mcs", file.mcs},
      {"box", {{"lo", index_json(file.box.lo)}, {"hi", index_json(file.box.hi)}, {"margin", file.box.margin}}},
      {"dims", index_json(d)},
      {"h", file.lattice.h()},
      {"arrays", file.names},
      {"mask", file.mask.has_value()},
      {"dtype", "<f8"},
      {"order", "x-fastest"},
  };

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
    out << header.dump() << '\n';
    for (const auto& a : file.arrays) write_le(out, a);
    if (file.mask) {
      out.write(reinterpret_cast<const char*>(file.mask->data()), static_cast<std::streamsize>(file.mask->size()));
    }
    out.close();
    if (!out) fail(ErrorCode::IoFailure, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot rename " + tmp.string() + ": " + ec.message());
}

HandoffFile read_handoff(const std::filesystem::path& path, std::optional<std::int64_t> expected_mcs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::IoFailure, path.string() + ": missing header");

  HandoffFile file;
  bool has_mask = false;
  try {
    const auto header = json::parse(line);
    if (header.at("format").get<std::string>() != kFormat || header.at("version").get<int>() != kVersion) {
      fail(ErrorCode::IoFailure, path.string() + ": not a version 1 handoff file");
    }
    file.mcs = header.at("mcs").get<std::int64_t>();
    const auto& box = header.at("box");
    file.box = {index_from(box.at("lo")), index_from(box.at("hi")), box.at("margin").get<int>()};
    file.lattice = Lattice3D(index_from(header.at("dims")), header.at("h").get<double>());
    file.names = header.at("arrays").get<std::vector<std::string>>();
    has_mask = header.at("mask").get<bool>();
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, path.string() + ": bad header: " + e.what());
  }

  if (expected_mcs && *expected_mcs != file.mcs) {
    fail(ErrorCode::StaleFile, path.string() + ": expected mcs " + std::to_string(*expected_mcs) + ", file has " +
                                   std::to_string(file.mcs));
  }

  const auto n = file.lattice.size();
  for (const auto& name : file.names) {
    auto values = read_le(in, n);
    if (values.size() != n) fail(ErrorCode::IoFailure, path.string() + ": truncated array '" + name + "'");
    file.arrays.push_back(std::move(values));
  }
  if (has_mask) {
    std::vector<std::uint8_t> bits(n);
    in.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) fail(ErrorCode::IoFailure, path.string() + ": truncated mask");
    file.mask = std::move(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) fail(ErrorCode::IoFailure, path.string() + ": trailing bytes");
  return file;
}

HandoffFile pack_fields(std::int64_t mcs, const BoundingBox& box, const FieldSet& fields) {
  HandoffFile file;
  file.mcs = mcs;
  file.box = box;
  file.lattice = fields.lattice();
  for (auto s : kAllSpecies) {
    file.names.emplace_back(species_name(s));
    const auto v = fields[s].values();
    file.arrays.emplace_back(v.begin(), v.end());
  }
  return file;
}

FieldSet unpack_fields(const HandoffFile& file) {
  FieldSet fields;
  for (auto s : kAllSpecies) fields[s] = ScalarField(file.lattice, file.array(std::string(species_name(s))));
  return fields;
}

HandoffFile pack_step_input(std::int64_t mcs, const BoundingBox& box, const StepData& data,
                            const VoxelMask& box_mask) {
  auto file = pack_fields(mcs, box, data.fields);
  if (!(box_mask.lattice() == file.lattice)) fail(ErrorCode::DimMismatch, "box mask lattice differs from fields");
  for (auto s : kAllSpecies) {
    const auto src = data.source[s].values();
    const auto upt = data.uptake[s].values();
    file.names.push_back(input_name("source", s));
    file.arrays.emplace_back(src.begin(), src.end());
    file.names.push_back(input_name("uptake", s));
    file.arrays.emplace_back(upt.begin(), upt.end());
  }
  const auto scale = data.diffusivity_scale.values();
  file.names.emplace_back("diffusivity_scale");
  file.arrays.emplace_back(scale.begin(), scale.end());
  const auto bits = box_mask.bits();
  file.mask.emplace(bits.begin(), bits.end());
  return file;
}

StepData unpack_step_input(const HandoffFile& file) {
  StepData data;
  data.fields = unpack_fields(file);
  for (auto s : kAllSpecies) {
    data.source[s] = ScalarField(file.lattice, file.array(input_name("source", s)));
    data.uptake[s] = ScalarField(file.lattice, file.array(input_name("uptake", s)));
  }
  data.diffusivity_scale = ScalarField(file.lattice, file.array("diffusivity_scale"));
  return data;
}

ParallelStepResult run_shared_file_step(const StepSetup& setup, const StepData& data, const VoxelMask& box_mask,
                                        const BoundingBox& box, std::int64_t mcs, int workers,
                                        const GMRESConfig& cfg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const auto in_path = dir / "handoff_in.mpmh";
  const auto out_path = dir / "handoff_out.mpmh";

  ParallelStepResult result;
  result.partition = default_partition(setup.lattice, workers);
  const int p = result.partition.workers();
  result.worker_seconds.assign(static_cast<std::size_t>(p), 0.0);

  write_handoff(in_path, pack_step_input(mcs, box, data, box_mask));

  std::array<SolveStats, kSpeciesCount> stats{};
  std::array<std::size_t, kSpeciesCount> clamped{};
  run_worker_group(p, std::chrono::seconds(30), [&](Communicator& comm) {
    const auto local = unpack_step_input(read_handoff(in_path, mcs));
    if (!(local.fields.lattice() == setup.lattice)) fail(ErrorCode::DimMismatch, "handoff lattice differs");
    auto r = distributed_step(setup, ResidentData{&local}, result.partition, comm, cfg);
    result.worker_seconds[static_cast<std::size_t>(comm.rank())] = r.solve_seconds;
    if (comm.rank() == 0) {
      write_handoff(out_path, pack_fields(mcs, box, r.outcome->fields));
      stats = std::move(r.outcome->stats);
      clamped = r.outcome->clamped;
    }
  });

  result.outcome.fields = unpack_fields(read_handoff(out_path, mcs));
  result.outcome.stats = std::move(stats);
  result.outcome.clamped = clamped;
  return result;
}

}  // namespace mpmsim
