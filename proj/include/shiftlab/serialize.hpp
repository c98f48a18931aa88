#pragma once

// JSON serialization of the domain specifications. Complex numbers are
// explicit [re, im] pairs throughout; no locale-dependent formatting.

#include <json.hpp>

#include "shiftlab/states.hpp"

namespace shiftlab::serialize {

using json = nlohmann::json;

inline json to_json(const cplx& c) { return json::array({c.real(), c.imag()}); }

inline cplx complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw schema_error("complex values must be [re, im] pairs");
  return cplx(j[0].get<double>(), j[1].get<double>());
}

inline VectorXcd complex_vector_from(const json& j) {
  if (!j.is_array() || j.empty()) throw schema_error("expected a nonempty array");
  VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = complex_from(j[i]);
  return v;
}

inline VectorXd real_vector_from(const json& j) {
  if (!j.is_array() || j.empty()) throw schema_error("expected a nonempty array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw schema_error("expected numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline json to_json(const VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v[i]));
  return out;
}

// ---------------------------------------------------------------------------
// SequenceFamily
// ---------------------------------------------------------------------------

inline states::TailClass tail_class_from(const std::string& s) {
  if (s == "zero") return states::TailClass::zero;
  if (s == "summable") return states::TailClass::summable;
  if (s == "divergent") return states::TailClass::divergent;
  if (s == "undeclared") return states::TailClass::undeclared;
  throw schema_error("unknown tail class: " + s);
}

inline states::SequenceFamily sequence_family_from(const json& j) {
  if (!j.is_object() || !j.contains("name"))
    throw schema_error("sequence family needs a name");
  const std::string name = j.at("name").get<std::string>();
  if (name == "theta_harmonic") return states::SequenceFamily::theta_harmonic();
  if (name == "inverse_sqrt") return states::SequenceFamily::inverse_sqrt();
  if (name == "geometric") {
    if (!j.contains("ratio")) throw schema_error("geometric needs ratio");
    return states::SequenceFamily::geometric(j.at("ratio").get<double>());
  }
  if (name == "constant") {
    if (!j.contains("h")) throw schema_error("constant needs h");
    return states::SequenceFamily::constant(complex_vector_from(j.at("h")));
  }
  if (name == "explicit_list") {
    if (!j.contains("vectors")) throw schema_error("explicit_list needs vectors");
    std::vector<VectorXcd> vs;
    for (const auto& v : j.at("vectors")) vs.push_back(complex_vector_from(v));
    const auto tail = j.contains("tail")
                          ? tail_class_from(j.at("tail").get<std::string>())
                          : states::TailClass::undeclared;
    return states::SequenceFamily::explicit_list(std::move(vs), tail);
  }
  throw schema_error("unknown sequence family '" + name +
                     "'; valid names: theta_harmonic, inverse_sqrt, geometric, "
                     "constant, explicit_list");
}

// ---------------------------------------------------------------------------
// IsometryFamily
// ---------------------------------------------------------------------------

inline cuntz::IsometryFamily isometry_family_from(const json& j, std::uint64_t seed = 1) {
  if (!j.is_object() || !j.contains("variant"))
    throw schema_error("isometry family needs a variant");
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "haar") {
    if (!j.contains("n")) throw schema_error("haar needs n");
    return cuntz::IsometryFamily::haar(j.at("n").get<int>());
  }
  if (variant == "weighted_haar") {
    if (!j.contains("eta")) throw schema_error("weighted_haar needs eta");
    return cuntz::IsometryFamily::weighted_haar(complex_vector_from(j.at("eta")));
  }
  if (variant == "nearest_neighbor") {
    if (!j.contains("n")) throw schema_error("nearest_neighbor needs n");
    return cuntz::IsometryFamily::nearest_neighbor(j.at("n").get<int>());
  }
  if (variant == "gauge_perturbed") {
    if (j.contains("sequence"))
      return cuntz::IsometryFamily::gauge_perturbed(
          cuntz::make_unitary_sequence(sequence_family_from(j.at("sequence"))));
    if (j.contains("random_horizon")) {
      const int n = j.at("n").get<int>();
      const int h = j.at("random_horizon").get<int>();
      std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
      std::normal_distribution<double> g(0.0, 1.0);
      std::vector<MatrixXcd> us;
      for (int p = 0; p < h; ++p) {
        MatrixXcd a(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) a(r, c) = cplx(g(gen), g(gen));
        Eigen::HouseholderQR<MatrixXcd> qr(a);
        MatrixXcd q = qr.householderQ();
        const MatrixXcd rr = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < n; ++i) q.col(i) *= rr(i, i) / std::abs(rr(i, i));
        us.push_back(std::move(q));
      }
      return cuntz::IsometryFamily::gauge_perturbed(
          cuntz::UnitarySequence::from_list(std::move(us), n));
    }
    throw schema_error("gauge_perturbed needs a sequence or random_horizon");
  }
  throw schema_error("unknown isometry variant: " + variant);
}

// ---------------------------------------------------------------------------
// StateSpec
// ---------------------------------------------------------------------------

inline states::StateSpec state_spec_from(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw schema_error("state needs a kind");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cuntz")
    return states::StateSpec::cuntz_state(complex_vector_from(j.at("eta")));
  if (kind == "product")
    return states::StateSpec::product(sequence_family_from(j.at("family")));
  if (kind == "nearest_neighbor")
    return states::StateSpec::nearest_neighbor(j.at("n").get<int>());
  if (kind == "finite_mix") {
    std::vector<VectorXcd> vs;
    for (const auto& v : j.at("vectors")) vs.push_back(complex_vector_from(v));
    return states::StateSpec::finite_mix(j.at("anchor").get<int>(),
                                         real_vector_from(j.at("weights")),
                                         std::move(vs));
  }
  throw schema_error("unknown state kind: " + kind);
}

}  // namespace shiftlab::serialize
