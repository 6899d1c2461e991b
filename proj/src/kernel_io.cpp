#include "wv/kernel_io.hpp"

#include <charconv>
#include <map>
#include <string>

namespace wv::kernels {
namespace {

using Params = std::map<std::string, double>;

double take(Params& p, const std::string& key, std::optional<double> fallback, std::string_view family) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (fallback) return *fallback;
    throw DomainError("kernel '" + std::string(family) + "' needs parameter '" + key + "'");
  }
  const double v = it->second;
  p.erase(it);
  return v;
}

std::optional<double> take_opt(Params& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) return std::nullopt;
  const double v = it->second;
  p.erase(it);
  return v;
}

KernelSpec build(std::string family, Params p, std::optional<double> default_eps) {
  if (p.count("tau_theta")) {
    p["tau"] = p["tau_theta"];
    p.erase("tau_theta");
  }
  KernelSpec k;
  if (family == "gfe" || family == "gfe1" || family == "gfe2" || family == "gfe3" || family == "gfe_i" ||
      family == "gfe_ii" || family == "gfe_iii") {
    const GfeKind kind = parse_gfe(family);
    const double alpha = take(p, "alpha", {}, family);
    const double eps = take(p, "eps", default_eps, family);
    const double tau = take(p, "tau", 1.0, family);
    k = from_gfe({kind, alpha}, eps, tau, take_opt(p, "rho"));
  } else {
    switch (parse_family(family)) {
      case Family::zero: k = KernelSpec::zero(); break;
      case Family::dirac: k = KernelSpec::dirac(take(p, "eps", default_eps, family)); break;
      case Family::exponential: k = KernelSpec::exponential(take(p, "eps", default_eps, family)); break;
      case Family::abel: {
        const double alpha = take(p, "alpha", {}, family);
        const double eps = take(p, "eps", default_eps, family);
        k = KernelSpec::abel(alpha, eps, take(p, "tau", 1.0, family));
        break;
      }
      case Family::mittag_leffler: {
        const double a = take(p, "a", {}, family), b = take(p, "b", {}, family);
        const double eps = take(p, "eps", default_eps, family);
        if (auto rho = take_opt(p, "rho")) {
          if (p.count("tau")) throw DomainError("give either tau or rho for an ML kernel, not both");
          k = KernelSpec::mittag_leffler_fixed_ratio(a, b, eps, *rho);
        } else {
          k = KernelSpec::mittag_leffler(a, b, eps, take(p, "tau", 1.0, family));
        }
        break;
      }
      case Family::limit_abel: {
        const double alpha = take(p, "alpha", {}, family);
        k = KernelSpec::limit_abel(alpha, take(p, "tau", 1.0, family));
        break;
      }
    }
  }
  if (!p.empty()) throw DomainError("unknown parameter '" + p.begin()->first + "' for kernel '" + family + "'");
  validate(k);
  return k;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KernelSpec parse_kernel(std::string_view text, std::optional<double> default_eps) {
  // describe() form "family(k=v,...)" is accepted as well
  std::string normalized(text);
  if (const auto open = normalized.find('('); open != std::string::npos && normalized.find(':') == std::string::npos) {
    const auto close = normalized.rfind(')');
    if (close == std::string::npos || close < open || !trim(std::string_view(normalized).substr(close + 1)).empty())
      throw DomainError("unbalanced parentheses in kernel '" + normalized + "'");
    normalized = normalized.substr(0, open) + ":" + normalized.substr(open + 1, close - open - 1);
  }
  text = normalized;
  const auto colon = text.find(':');
  std::string family = trim(text.substr(0, colon));
  for (auto& c : family) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  Params p;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string item = trim(rest.substr(0, comma));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw DomainError("kernel parameter '" + item + "' is not key=value");
      const std::string key = trim(item.substr(0, eq)), val = trim(item.substr(eq + 1));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
      if (ec != std::errc() || ptr != val.data() + val.size())
        throw DomainError("kernel parameter '" + key + "' has a non-numeric value '" + val + "'");
      p[key] = v;
    }
  }
  return build(family, p, default_eps);
}

KernelSpec kernel_from_json(const nlohmann::json& j, std::optional<double> default_eps) {
  if (j.is_string()) return parse_kernel(j.get<std::string>(), default_eps);
  if (!j.is_object() || !j.contains("family")) throw DomainError("kernel must be a string or an object with 'family'");
  Params p;
  for (const auto& [key, val] : j.items()) {
    if (key == "family") continue;
    if (!val.is_number()) throw DomainError("kernel parameter '" + key + "' must be a number");
    p[key] = val.get<double>();
  }
  return build(j["family"].get<std::string>(), p, default_eps);
}

nlohmann::json kernel_to_json(const KernelSpec& k) {
  nlohmann::json j;
  j["family"] = std::string(to_string(k.family));
  auto put = [&](const char* name, const std::optional<double>& v) {
    if (v) j[name] = *v;
  };
  put("a", k.a);
  put("b", k.b);
  put("alpha", k.alpha);
  put("eps", k.eps);
  put("tau", k.tau_theta);
  put("rho", k.rho);
  return j;
}

}  // namespace wv::kernels
