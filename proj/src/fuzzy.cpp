#include "fatigue/fuzzy.hpp"

#include <algorithm>

#include "fatigue/common.hpp"

namespace fatigue::fuzzy {

std::string family_name(OperatorFamily f) {
    switch (f) {
        case OperatorFamily::Product: return "product";
        case OperatorFamily::Lukasiewicz: return "lukasiewicz";
        case OperatorFamily::Goedel: return "goedel";
    }
    return "product";
}

OperatorFamily family_from_name(const std::string& s) {
    if (s == "product") return OperatorFamily::Product;
    if (s == "lukasiewicz") return OperatorFamily::Lukasiewicz;
    if (s == "goedel" || s == "godel" || s == "minmax") return OperatorFamily::Goedel;
    raise(ErrorCode::ConfigError, "unknown operator family '" + s + "'");
}

double t_norm(double a, double b, OperatorFamily f) {
    switch (f) {
        case OperatorFamily::Product: return a * b;
        case OperatorFamily::Lukasiewicz: return std::max(0.0, a + b - 1.0);
        case OperatorFamily::Goedel: return std::min(a, b);
    }
    return a * b;
}

double t_conorm(double a, double b, OperatorFamily f) {
    switch (f) {
        case OperatorFamily::Product: return a + b - a * b;
        case OperatorFamily::Lukasiewicz: return std::min(1.0, a + b);
        case OperatorFamily::Goedel: return std::max(a, b);
    }
    return a + b - a * b;
}

PartialDerivatives t_norm_grad(double a, double b, OperatorFamily f) {
    switch (f) {
        case OperatorFamily::Product:
            return {b, a};
        case OperatorFamily::Lukasiewicz: {
            double active = a + b - 1.0 > 0.0 ? 1.0 : 0.0;
            return {active, active};
        }
        case OperatorFamily::Goedel:
            // std::min(a, b) returns a unless b < a.
            return b < a ? PartialDerivatives{0.0, 1.0} : PartialDerivatives{1.0, 0.0};
    }
    return {b, a};
}

PartialDerivatives t_conorm_grad(double a, double b, OperatorFamily f) {
    switch (f) {
        case OperatorFamily::Product:
            return {1.0 - b, 1.0 - a};
        case OperatorFamily::Lukasiewicz: {
            double active = a + b < 1.0 ? 1.0 : 0.0;
            return {active, active};
        }
        case OperatorFamily::Goedel:
            // std::max(a, b) returns a unless a < b.
            return a < b ? PartialDerivatives{0.0, 1.0} : PartialDerivatives{1.0, 0.0};
    }
    return {1.0 - b, 1.0 - a};
}

}  // namespace fatigue::fuzzy
