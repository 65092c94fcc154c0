#include "higsfa/expansions.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "higsfa/kernels.hpp"

namespace higsfa::expansions {

namespace {

int term_size(const Term& t) {
  const int len = t.to - t.from;
  switch (t.kind) {
    case TermKind::identity:
    case TermKind::e08: return len;
    case TermKind::qt:
    case TermKind::qn: return len * (len + 1) / 2;
    case TermKind::max2: return len - 1;
  }
  return 0;
}

}  // namespace

ExpansionSpec ExpansionSpec::identity(int dim) { return {{{TermKind::identity, 0, dim}}}; }

ExpansionSpec ExpansionSpec::quadratic(int dim) {
  return {{{TermKind::identity, 0, dim}, {TermKind::qt, 0, dim}}};
}

void ExpansionSpec::validate(int input_dim) const {
  if (terms.empty()) throw ConfigError("expansion has no terms");
  for (const auto& t : terms) {
    if (t.from < 0 || t.to > input_dim || t.from >= t.to)
      throw ConfigError(std::string("expansion term ") + term_name(t.kind) + " range [" +
                        std::to_string(t.from) + "," + std::to_string(t.to) +
                        ") invalid for input dimension " + std::to_string(input_dim));
    if (t.kind == TermKind::max2 && t.to - t.from < 2)
      throw ConfigError("max2 needs a slice of at least 2 components");
  }
}

int ExpansionSpec::output_dim(int input_dim) const {
  validate(input_dim);
  int total = 0;
  for (const auto& t : terms) total += term_size(t);
  return total;
}

Vector ExpansionSpec::expand(const Vector& x) const {
  const int input_dim = static_cast<int>(x.size());
  Vector out(output_dim(input_dim));
  int pos = 0;
  for (const auto& t : terms) {
    const int len = t.to - t.from;
    const double* src = x.data() + t.from;
    switch (t.kind) {
      case TermKind::identity:
        out.segment(pos, len) = x.segment(t.from, len);
        pos += len;
        break;
      case TermKind::qt:
        kernels::scaled_upper_products(1.0, src, len, out.data() + pos);
        pos += len * (len + 1) / 2;
        break;
      case TermKind::qn: {
        const double norm_sq = kernels::dot(src, src, len);
        kernels::scaled_upper_products(1.0 / (1.0 + norm_sq), src, len, out.data() + pos);
        pos += len * (len + 1) / 2;
        break;
      }
      case TermKind::e08:
        for (int k = 0; k < len; ++k) out[pos + k] = std::pow(std::abs(src[k]), 0.8);
        pos += len;
        break;
      case TermKind::max2:
        kernels::pairwise_max(src, len, out.data() + pos);
        pos += len - 1;
        break;
    }
  }
  return out;
}

Matrix ExpansionSpec::expand(const Matrix& x) const {
  const int input_dim = static_cast<int>(x.cols());
  Matrix out(x.rows(), output_dim(input_dim));
  for (Index n = 0; n < x.rows(); ++n) {
    int pos = 0;
    const double* row = x.data() + n * x.cols();
    double* dst = out.data() + n * out.cols();
    for (const auto& t : terms) {
      const int len = t.to - t.from;
      const double* src = row + t.from;
      switch (t.kind) {
        case TermKind::identity:
          for (int k = 0; k < len; ++k) dst[pos + k] = src[k];
          pos += len;
          break;
        case TermKind::qt:
          kernels::scaled_upper_products(1.0, src, len, dst + pos);
          pos += len * (len + 1) / 2;
          break;
        case TermKind::qn: {
          const double norm_sq = kernels::dot(src, src, len);
          kernels::scaled_upper_products(1.0 / (1.0 + norm_sq), src, len, dst + pos);
          pos += len * (len + 1) / 2;
          break;
        }
        case TermKind::e08:
          for (int k = 0; k < len; ++k) dst[pos + k] = std::pow(std::abs(src[k]), 0.8);
          pos += len;
          break;
        case TermKind::max2:
          kernels::pairwise_max(src, len, dst + pos);
          pos += len - 1;
          break;
      }
    }
  }
  return out;
}

const char* term_name(TermKind k) {
  switch (k) {
    case TermKind::identity: return "identity";
    case TermKind::qt: return "qt";
    case TermKind::qn: return "qn";
    case TermKind::e08: return "e08";
    case TermKind::max2: return "max2";
  }
  return "unknown";
}

TermKind term_from_name(const std::string& name) {
  if (name == "identity") return TermKind::identity;
  if (name == "qt") return TermKind::qt;
  if (name == "qn") return TermKind::qn;
  if (name == "e08") return TermKind::e08;
  if (name == "max2") return TermKind::max2;
  throw ConfigError("unknown expansion term '" + name + "'");
}

ExpansionSpec expansion_from_json(const nlohmann::json& spec, int input_dim) {
  if (!spec.is_array()) throw ConfigError("expansion spec must be a JSON array of terms");
  ExpansionSpec out;
  for (const auto& item : spec) {
    Term t;
    t.kind = term_from_name(item.at("term").get<std::string>());
    t.from = item.value("from", 0);
    t.to = item.value("to", input_dim);
    out.terms.push_back(t);
  }
  out.validate(input_dim);
  return out;
}

nlohmann::json expansion_to_json(const ExpansionSpec& spec) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : spec.terms)
    out.push_back({{"term", term_name(t.kind)}, {"from", t.from}, {"to", t.to}});
  return out;
}

}  // namespace higsfa::expansions
