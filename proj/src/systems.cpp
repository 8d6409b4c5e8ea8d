#include "stochflow/systems.hpp"

namespace stochflow::systems {

FieldStrings hamiltonian_torus_fields() {
  return {{"cos(2*pi*(x1 + x2))/(4*pi)", "-cos(2*pi*(x1 + x2))/(4*pi)"},
          {{"-sin(2*pi*x1)*sin(2*pi*x2)/(2*pi)", "-cos(2*pi*x1)*cos(2*pi*x2)/(2*pi)"},
           {"cos(2*pi*x2)/(2*pi)", "sin(2*pi*x1)/(2*pi)"}}};
}

StratonovichSystem from_strings(const ChartedManifold& m, const FieldStrings& fields) {
  std::vector<VectorField> diffusions;
  for (const auto& d : fields.diffusions) diffusions.push_back(VectorField::parse(d));
  return StratonovichSystem(m, VectorField::parse(fields.drift), std::move(diffusions));
}

StratonovichSystem hamiltonian_torus() { return from_strings(ChartedManifold::unit_torus(2), hamiltonian_torus_fields()); }

StratonovichSystem translation_bm_torus() {
  return from_strings(ChartedManifold::unit_torus(2), {{"0", "0"}, {{"1", "0"}, {"0", "1"}}});
}

StratonovichSystem multiplicative_circle() {
  return from_strings(ChartedManifold::unit_torus(1), {{"0"}, {{"sin(2*pi*x1)"}}});
}

StratonovichSystem sink_circle() { return from_strings(ChartedManifold::unit_torus(1), {{"sin(2*pi*x1)"}, {}}); }

StratonovichSystem additive_circle() { return from_strings(ChartedManifold::unit_torus(1), {{"0"}, {{"1"}}}); }

} // namespace stochflow::systems
