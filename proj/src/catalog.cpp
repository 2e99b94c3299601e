#include "retarda/catalog.hpp"

#include <array>
#include <cstring>

#include "retarda/errors.hpp"

namespace retarda {

namespace {

struct Entry {
    const char* name;
    const char* json;
};

// Entries are mirrored as files under catalog/ for reference and editing;
// parse_system validates both identically.
constexpr const char* kLinearDelay = R"({
  "name": "linear-delay",
  "description": "Scalar delayed decay: x' = -x(t-1). Stable; the default history is the constant 1.",
  "n": 1,
  "m": 0,
  "delays": [1.0],
  "f": ["-xd[1][1]"],
  "kappa": "1.01",
  "default_history": {
    "dim": 1,
    "point_value": [1.0],
    "pieces": [{"from": -1.0, "to": 0.0, "poly_coeffs": [[1.0]]}]
  }
})";

constexpr const char* kDelayFeedback = R"({
  "name": "delay-feedback",
  "description": "Scalar delayed growth: x' = x(t-1). Smooth but unstable; exercises jump histories.",
  "n": 1,
  "m": 0,
  "delays": [1.0],
  "f": ["xd[1][1]"],
  "kappa": "1.01",
  "default_history": {
    "dim": 1,
    "point_value": [1.0],
    "pieces": [{"from": -1.0, "to": 0.0, "poly_coeffs": [[1.0]]}]
  }
})";

constexpr const char* kRiccati = R"({
  "name": "riccati",
  "description": "x' = x^2 (delay slot unused). Finite escape at 1/x(0) for positive starts; the bound 2.1 r is valid on every ball.",
  "n": 1,
  "m": 0,
  "delays": [1.0],
  "f": ["x[1]^2"],
  "kappa": "2.1*r",
  "default_history": {
    "dim": 1,
    "point_value": [1.0],
    "pieces": [{"from": -1.0, "to": 0.0, "poly_coeffs": [[1.0]]}]
  }
})";

constexpr const char* kIntegratorInput = R"({
  "name": "integrator-input",
  "description": "Pure integrator x' = u (delay slot unused). Reach sup over |x0|,|u| <= r on [0,T] is r (1 + T).",
  "n": 1,
  "m": 1,
  "delays": [1.0],
  "f": ["u[1]"],
  "kappa": "0.01",
  "default_history": {
    "dim": 1,
    "point_value": [0.0],
    "pieces": [{"from": -1.0, "to": 0.0, "poly_coeffs": [[0.0]]}]
  }
})";

constexpr const char* kStableDelay = R"({
  "name": "stable-delay",
  "description": "x' = -x - 0.25 x(t-1). Exponentially stable for all history shapes; the joint Lipschitz constant is sqrt(1 + 1/16) < 1.04.",
  "n": 1,
  "m": 0,
  "delays": [1.0],
  "f": ["-x[1] - 0.25*xd[1][1]"],
  "kappa": "1.04",
  "default_history": {
    "dim": 1,
    "point_value": [1.0],
    "pieces": [{"from": -1.0, "to": 0.0, "poly_coeffs": [[1.0]]}]
  }
})";

constexpr const char* kExponentialGrowth = R"({
  "name": "exponential-growth",
  "description": "x' = x (delay slot unused). Grows like e^t; defeats every decaying envelope.",
  "n": 1,
  "m": 0,
  "delays": [1.0],
  "f": ["x[1]"],
  "kappa": "1.01",
  "default_history": {
    "dim": 1,
    "point_value": [1.0],
    "pieces": [{"from": -1.0, "to": 0.0, "poly_coeffs": [[1.0]]}]
  }
})";

constexpr const char* kZeroRhs = R"({
  "name": "zero-rhs",
  "description": "x' = 0 (delay slot unused). Constant flow; norms never decay, so attractivity fails.",
  "n": 1,
  "m": 0,
  "delays": [1.0],
  "f": ["0"],
  "kappa": "0.01",
  "default_history": {
    "dim": 1,
    "point_value": [1.0],
    "pieces": [{"from": -1.0, "to": 0.0, "poly_coeffs": [[1.0]]}]
  }
})";

constexpr const char* kPureDecay = R"({
  "name": "pure-decay",
  "description": "x' = -x (delay slot unused). Norm nonincreasing along the flow; history flushes after one delay span.",
  "n": 1,
  "m": 0,
  "delays": [1.0],
  "f": ["-x[1]"],
  "kappa": "1.01",
  "default_history": {
    "dim": 1,
    "point_value": [1.0],
    "pieces": [{"from": -1.0, "to": 0.0, "poly_coeffs": [[1.0]]}]
  }
})";

constexpr const char* kTwoDelayTanh = R"({
  "name": "two-delay-tanh",
  "description": "Two states, two delays, one input, saturating couplings. Smooth test bed for the reduction and restart suites; the bound 2.5 covers the joint Jacobian for all arguments and |u| bounded by 1.",
  "n": 2,
  "m": 1,
  "delays": [0.7, 1.3],
  "f": ["-x[1] + 0.3*tanh(xd[1][2]) + 0.2*u[1]", "-2*x[2] + 0.3*sin(xd[2][1])"],
  "kappa": "2.5",
  "default_history": {
    "dim": 2,
    "point_value": [1.0, -0.5],
    "pieces": [{"from": -1.3, "to": 0.0, "poly_coeffs": [[1.0, -0.5]]}]
  }
})";

constexpr std::array<Entry, 9> kCatalog{{
    {"linear-delay", kLinearDelay},
    {"delay-feedback", kDelayFeedback},
    {"riccati", kRiccati},
    {"integrator-input", kIntegratorInput},
    {"stable-delay", kStableDelay},
    {"exponential-growth", kExponentialGrowth},
    {"zero-rhs", kZeroRhs},
    {"pure-decay", kPureDecay},
    {"two-delay-tanh", kTwoDelayTanh},
}};

} // namespace

std::vector<std::string> catalog_names() {
    std::vector<std::string> names;
    names.reserve(kCatalog.size());
    for (const auto& e : kCatalog) names.emplace_back(e.name);
    return names;
}

bool catalog_has(const std::string& name) {
    for (const auto& e : kCatalog)
        if (name == e.name) return true;
    return false;
}

const char* catalog_json(const std::string& name) {
    for (const auto& e : kCatalog)
        if (name == e.name) return e.json;
    throw DomainError("unknown catalog system '" + name + "'");
}

SystemDef load_catalog(const std::string& name) { return parse_system(catalog_json(name)); }

} // namespace retarda
