#pragma once

#include <string>

namespace fatigue::fuzzy {

// Operator families:
//   Product:     and(a,b) = a*b            or(a,b) = a + b - ab
//   Lukasiewicz: and(a,b) = max(0, a+b-1)  or(a,b) = min(1, a+b)
//   Goedel:      and(a,b) = min(a,b)       or(a,b) = max(a,b)
enum class OperatorFamily { Product, Lukasiewicz, Goedel };

std::string family_name(OperatorFamily f);
OperatorFamily family_from_name(const std::string& s);

double t_norm(double a, double b, OperatorFamily f);
double t_conorm(double a, double b, OperatorFamily f);

// Subgradients at the min/max and clamp kinks follow the branch the forward
// std::min/std::max implementation returns, so backward is consistent with
// forward everywhere.
struct PartialDerivatives {
    double da;
    double db;
};

PartialDerivatives t_norm_grad(double a, double b, OperatorFamily f);
PartialDerivatives t_conorm_grad(double a, double b, OperatorFamily f);

}  // namespace fatigue::fuzzy
