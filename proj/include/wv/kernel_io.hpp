#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wv/kernels.hpp"

/// Text and JSON forms of kernel specifications.
///
///   zero | dirac:eps=0.1 (or dirac(eps=0.1), as printed by describe()) | exp:eps=0.1 | abel:alpha=0.5,eps=0.1,tau=1
///   ml:a=0.5,b=0.75,eps=0.01,tau=1 | ml:a=0.8,b=0.4,eps=0.01,rho=1
///   limit_abel:alpha=0.25,tau=1 | gfe:alpha=0.5,eps=0.1 (also gfe1, gfe2, gfe3)
namespace wv::kernels {

/// `default_eps` fills in eps when the text leaves it out (sweep templates).
KernelSpec parse_kernel(std::string_view text, std::optional<double> default_eps = {});
KernelSpec kernel_from_json(const nlohmann::json& j, std::optional<double> default_eps = {});
nlohmann::json kernel_to_json(const KernelSpec& spec);

}  // namespace wv::kernels
