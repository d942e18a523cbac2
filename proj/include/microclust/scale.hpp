#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace microclust {

/// How the noise level c maps to the component standard deviation.
///
/// `SigmaLinear` (σ = c/N) is the default: it is the convention under which
/// the reported break points hold (half the mean spacing equals two standard
/// deviations at c = 0.25, half correct near c = 2/3). `SigmaSquared`
/// (σ² = c/N) is the literal variance convention.
enum class ScaleConvention { SigmaLinear, SigmaSquared };

double sigma_for(double c, std::uint64_t n, ScaleConvention convention);
std::string_view to_string(ScaleConvention convention);
// Accepts "sigma" / "sigma-squared"; throws std::invalid_argument otherwise.
ScaleConvention parse_scale_convention(std::string_view text);

}  // namespace microclust
