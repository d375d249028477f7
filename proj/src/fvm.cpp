#include "mpmsim/fvm.hpp"

#include <array>
#include <string>

#include "mpmsim/errors.hpp"

namespace mpmsim {

namespace {

// Ascending column order in x-fastest storage; the centre slot marks where
// the diagonal goes.
constexpr std::array<Index3, 7> kStencil{{
    {0, 0, -1}, {0, -1, 0}, {-1, 0, 0}, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
}};

double face_scale(double a, double b) noexcept {
  if (a == b) return a;
  const double s = a + b;
  return s > 0.0 ? 2.0 * a * b / s : 0.0;
}

void require_lattice(const ScalarField& f, const Lattice3D& lat, const char* what) {
  if (f.lattice().dims() != lat.dims()) {
    fail(ErrorCode::DimMismatch, std::string(what) + " is not defined on the expected lattice");
  }
}

}  // namespace

void TransportParams::validate() const {
  if (!(diffusivity > 0.0)) fail(ErrorCode::InvalidArgument, "diffusivity must be > 0");
  if (!(decay_rate >= 0.0)) fail(ErrorCode::InvalidArgument, "decay_rate must be >= 0");
  if (!(far_field >= 0.0)) fail(ErrorCode::InvalidArgument, "far_field must be >= 0");
}

std::string_view species_name(Species s) noexcept {
  switch (s) {
    case Species::Oxygen: return "oxygen";
    case Species::Nutrient: return "nutrient";
    case Species::IL6: return "il6";
    case Species::IL8: return "il8";
  }
  return "unknown";
}

FieldSet FieldSet::uniform(const Lattice3D& lattice, std::array<double, kSpeciesCount> values) {
  FieldSet fs;
  for (std::size_t s = 0; s < kSpeciesCount; ++s) fs.species[s] = ScalarField(lattice, values[s]);
  return fs;
}

LinearSystem assemble_step(const ScalarField& field, const TransportParams& params, const ScalarField& source,
                           const ScalarField& uptake, double dt, const SlabLayout& layout,
                           const ScalarField* diffusivity_scale) {
  if (!(dt > 0.0)) fail(ErrorCode::NonPositiveDt, "time step must be positive, got " + std::to_string(dt));
  params.validate();
  const auto& owned = layout.owned_lattice();
  const auto& ext = layout.extended_lattice();
  const auto& global = layout.global();
  require_lattice(field, owned, "field");
  require_lattice(source, owned, "source");
  require_lattice(uptake, owned, "uptake");
  if (diffusivity_scale) require_lattice(*diffusivity_scale, ext, "diffusivity scale");

  const Index3 owned_lo = layout.owned_box().lo;
  const Index3 ext_lo = layout.extended_box().lo;
  const double inv_h2 = 1.0 / (global.h() * global.h());
  const double inv_dt = 1.0 / dt;
  const bool dirichlet = params.boundary == BoundaryKind::DirichletFarField;

  LinearSystem sys;
  sys.n_rows = owned.size();
  sys.n_cols = ext.size();
  sys.row_offsets.reserve(sys.n_rows + 1);
  sys.col_indices.reserve(sys.n_rows * kStencil.size());
  sys.values.reserve(sys.n_rows * kStencil.size());
  sys.rhs.resize(sys.n_rows);
  sys.diagonal_columns = layout.owned_to_extended();
  sys.row_offsets.push_back(0);

  for (std::size_t row = 0; row < sys.n_rows; ++row) {
    const Index3 oc = owned.coords(row);
    const Index3 gc{oc.i + owned_lo.i, oc.j + owned_lo.j, oc.k + owned_lo.k};
    const std::size_t self_col = sys.diagonal_columns[row];
    const double self_scale = diffusivity_scale ? (*diffusivity_scale)[self_col] : 1.0;

    double diag = inv_dt + params.decay_rate;
    double rhs = field[row] * inv_dt + source[row] - uptake[row];
    std::size_t diag_slot = 0;

    for (const auto& d : kStencil) {
      if (d == Index3{0, 0, 0}) {
        diag_slot = sys.values.size();
        sys.col_indices.push_back(self_col);
        sys.values.push_back(0.0);
        continue;
      }
      const Index3 gn{gc.i + d.i, gc.j + d.j, gc.k + d.k};
      if (!global.contains(gn)) {
        if (dirichlet) {
          const double coef = params.diffusivity * self_scale * inv_h2;
          diag += coef;
          rhs += coef * params.far_field;
        }
        continue;
      }
      const std::size_t col = ext.index(gn.i - ext_lo.i, gn.j - ext_lo.j, gn.k - ext_lo.k);
      const double other_scale = diffusivity_scale ? (*diffusivity_scale)[col] : 1.0;
      const double coef = params.diffusivity * face_scale(self_scale, other_scale) * inv_h2;
      diag += coef;
      sys.col_indices.push_back(col);
      sys.values.push_back(-coef);
    }
    sys.values[diag_slot] = diag;
    sys.rhs[row] = rhs;
    sys.row_offsets.push_back(sys.values.size());
  }
  return sys;
}

LinearSystem assemble_step(const ScalarField& field, const TransportParams& params, const ScalarField& source,
                           const ScalarField& uptake, double dt, const ScalarField* diffusivity_scale) {
  return assemble_step(field, params, source, uptake, dt, SlabLayout::whole(field.lattice()), diffusivity_scale);
}

void StepSetup::validate() const {
  if (!(dt > 0.0)) fail(ErrorCode::NonPositiveDt, "time step must be positive");
  for (const auto& t : transport) t.validate();
}

StepData StepData::quiescent(const Lattice3D& lattice) {
  return {FieldSet::uniform(lattice), FieldSet::uniform(lattice), FieldSet::uniform(lattice),
          ScalarField(lattice, 1.0)};
}

std::size_t clamp_non_negative(std::span<double> values) noexcept {
  std::size_t n = 0;
  for (auto& v : values) {
    if (v < 0.0) {
      v = 0.0;
      ++n;
    }
  }
  return n;
}

StepOutcome step_species(const StepSetup& setup, const StepData& data, const GMRESConfig& cfg) {
  setup.validate();
  const auto& lat = setup.lattice;
  const ScalarField* scale = data.diffusivity_scale.size() == lat.size() ? &data.diffusivity_scale : nullptr;

  StepOutcome out;
  for (auto s : kAllSpecies) {
    const auto idx = static_cast<std::size_t>(s);
    const auto& current = data.fields[s];
    require_lattice(current, lat, "species field");
    auto sys = assemble_step(current, setup.transport[idx], data.source[s], data.uptake[s], setup.dt, scale);
    auto solved = gmres_solve(sys, current.values(), cfg);
    out.clamped[idx] = clamp_non_negative(solved.x);
    out.fields.species[idx] = ScalarField(lat, std::move(solved.x));
    out.stats[idx] = std::move(solved.stats);
  }
  return out;
}

}  // namespace mpmsim
