#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "critiq/errors.hpp"
#include "critiq/rng.hpp"

namespace critiq {

enum class Family {
    exponential,
    deterministic,
    erlang,
    hyperexponential,
    uniform,
    lognormal,
    pareto,
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::exponential: return "exponential";
        case Family::deterministic: return "deterministic";
        case Family::erlang: return "erlang";
        case Family::hyperexponential: return "hyperexponential";
        case Family::uniform: return "uniform";
        case Family::lognormal: return "lognormal";
        case Family::pareto: return "pareto";
    }
    return "?";
}

// A positive random variable family with analytic first/second moments and an
// inverse-transform sampler. Immutable after construction; sampling goes
// through an explicit RngStream so specs can be shared across threads.
struct DistributionSpec {
    Family family{Family::exponential};
    std::vector<double> params;

    double mean{0.0};
    double variance{0.0};
    double scv{0.0};         // variance / mean^2, scale invariant
    double moment_sup{0.0};  // sup { p : E[X^p] < inf }; pareto: alpha, else inf
    double min_support{0.0};

    double sample(RngStream& rng) const {
        switch (family) {
            case Family::exponential:
                return -std::log(rng.uniform()) / params[0];
            case Family::deterministic:
                return params[0];
            case Family::erlang: {
                const int k = static_cast<int>(params[0]);
                double prod = 1.0;
                for (int i = 0; i < k; ++i) prod *= rng.uniform();
                return -std::log(prod) / params[1];
            }
            case Family::hyperexponential: {
                const double branch = rng.uniform();
                const double rate = branch < params[0] ? params[1] : params[2];
                return -std::log(rng.uniform()) / rate;
            }
            case Family::uniform:
                return params[0] + (params[1] - params[0]) * rng.uniform();
            case Family::lognormal:
                return std::exp(params[0] + params[1] * rng.normal());
            case Family::pareto:
                return params[1] * std::pow(rng.uniform(), -1.0 / params[0]);
        }
        return 0.0;
    }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ParameterError(msg);
}

}  // namespace detail

inline DistributionSpec make_distribution(Family family, const std::vector<double>& params) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    DistributionSpec d;
    d.family = family;
    d.params = params;
    d.moment_sup = inf;

    switch (family) {
        case Family::exponential: {
            detail::require(params.size() == 1, "exponential expects 1 parameter: rate");
            const double rate = params[0];
            detail::require(rate > 0.0, "exponential rate must be > 0");
            d.mean = 1.0 / rate;
            d.variance = 1.0 / (rate * rate);
            break;
        }
        case Family::deterministic: {
            detail::require(params.size() == 1, "deterministic expects 1 parameter: value");
            detail::require(params[0] > 0.0, "deterministic value must be > 0");
            d.mean = params[0];
            d.variance = 0.0;
            d.min_support = params[0];
            break;
        }
        case Family::erlang: {
            detail::require(params.size() == 2, "erlang expects 2 parameters: k, rate");
            const double kd = params[0], rate = params[1];
            detail::require(kd >= 1.0 && kd == std::floor(kd) && kd <= 1e4,
                            "erlang shape k must be an integer in [1, 1e4]");
            detail::require(rate > 0.0, "erlang rate must be > 0");
            d.mean = kd / rate;
            d.variance = kd / (rate * rate);
            break;
        }
        case Family::hyperexponential: {
            detail::require(params.size() == 3, "hyperexponential expects 3 parameters: p, rate1, rate2");
            const double p = params[0], r1 = params[1], r2 = params[2];
            detail::require(p > 0.0 && p < 1.0, "hyperexponential p must be in (0,1)");
            detail::require(r1 > 0.0 && r2 > 0.0, "hyperexponential rates must be > 0");
            d.mean = p / r1 + (1.0 - p) / r2;
            const double m2 = 2.0 * p / (r1 * r1) + 2.0 * (1.0 - p) / (r2 * r2);
            d.variance = m2 - d.mean * d.mean;
            break;
        }
        case Family::uniform: {
            detail::require(params.size() == 2, "uniform expects 2 parameters: a, b");
            const double a = params[0], b = params[1];
            detail::require(a >= 0.0 && b > a, "uniform needs 0 <= a < b");
            d.mean = 0.5 * (a + b);
            d.variance = (b - a) * (b - a) / 12.0;
            d.min_support = a;
            break;
        }
        case Family::lognormal: {
            detail::require(params.size() == 2, "lognormal expects 2 parameters: mu, sigma");
            const double s = params[1];
            detail::require(s > 0.0, "lognormal sigma must be > 0");
            d.mean = std::exp(params[0] + 0.5 * s * s);
            d.variance = (std::exp(s * s) - 1.0) * std::exp(2.0 * params[0] + s * s);
            break;
        }
        case Family::pareto: {
            detail::require(params.size() == 2, "pareto expects 2 parameters: alpha, scale");
            const double alpha = params[0], xm = params[1];
            detail::require(xm > 0.0, "pareto scale must be > 0");
            detail::require(alpha > 0.0, "pareto alpha must be > 0");
            if (alpha <= 2.0)
                throw ParameterError("pareto alpha must be > 2 (E[X^2] infinite otherwise)");
            d.mean = alpha * xm / (alpha - 1.0);
            d.variance = alpha * xm * xm / ((alpha - 1.0) * (alpha - 1.0) * (alpha - 2.0));
            d.moment_sup = alpha;
            d.min_support = xm;
            break;
        }
    }
    d.scv = d.variance / (d.mean * d.mean);
    return d;
}

// Scale a spec by factor c > 0: mean -> c*mean, variance -> c^2*variance,
// scv unchanged.
inline DistributionSpec rescaled(const DistributionSpec& d, double c) {
    detail::require(c > 0.0, "rescale factor must be > 0");
    DistributionSpec out = d;
    switch (d.family) {
        case Family::exponential: out.params[0] /= c; break;
        case Family::deterministic: out.params[0] *= c; break;
        case Family::erlang: out.params[1] /= c; break;
        case Family::hyperexponential:
            out.params[1] /= c;
            out.params[2] /= c;
            break;
        case Family::uniform:
            out.params[0] *= c;
            out.params[1] *= c;
            break;
        case Family::lognormal: out.params[0] += std::log(c); break;
        case Family::pareto: out.params[1] *= c; break;
    }
    out.mean = d.mean * c;
    out.variance = d.variance * c * c;
    out.scv = d.scv;
    out.min_support = d.min_support * c;
    return out;
}

// `family:p1,p2,...` e.g. "exp:1", "erlang:2,2", "hyperexp:0.5,2,0.5".
inline DistributionSpec parse_distribution(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ParameterError("distribution must look like family:p1,p2,... (got '" +
                             std::string(text) + "')");
    const std::string_view name = text.substr(0, colon);
    std::string_view rest = text.substr(colon + 1);

    Family family;
    if (name == "exp" || name == "exponential") family = Family::exponential;
    else if (name == "det" || name == "deterministic") family = Family::deterministic;
    else if (name == "erlang") family = Family::erlang;
    else if (name == "hyperexp" || name == "hyper" || name == "hyperexponential")
        family = Family::hyperexponential;
    else if (name == "uniform") family = Family::uniform;
    else if (name == "lognormal") family = Family::lognormal;
    else if (name == "pareto") family = Family::pareto;
    else throw ParameterError("unknown distribution family '" + std::string(name) + "'");

    std::vector<double> params;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string tok(rest.substr(0, comma));
        try {
            std::size_t used = 0;
            params.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParameterError("bad numeric parameter '" + tok + "' in '" +
                                 std::string(text) + "'");
        }
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return make_distribution(family, params);
}

// Arrival/service pair calibrated to arrival rate lambda and load rho.
// sigma2 = var(V - U) = var(U) + var(V); at rho = 1 this equals
// (ca2 + cs2) / lambda^2.
struct QueueModel {
    DistributionSpec arrival;
    DistributionSpec service;
    double lambda{1.0};
    double rho{1.0};
    double sigma2{0.0};

    double ca2() const { return arrival.scv; }
    double cs2() const { return service.scv; }
    double sigma() const { return std::sqrt(sigma2); }
    bool degenerate() const { return sigma2 == 0.0; }
    bool critical() const { return std::abs(rho - 1.0) <= 1e-12; }
};

inline QueueModel calibrate(const DistributionSpec& arrival, const DistributionSpec& service,
                            double lambda, double rho) {
    detail::require(lambda > 0.0, "lambda must be > 0");
    detail::require(rho > 0.0, "rho must be > 0");

    QueueModel m;
    m.lambda = lambda;
    m.rho = rho;

    const double mean_u = 1.0 / lambda;
    const double mean_v = rho / lambda;
    m.arrival = rescaled(arrival, mean_u / arrival.mean);
    m.service = rescaled(service, mean_v / service.mean);
    // Pin the recorded moments to the calibration targets so that, at rho = 1,
    // E[U] == E[V] holds exactly rather than up to rescale rounding.
    m.arrival.mean = mean_u;
    m.arrival.variance = arrival.scv * mean_u * mean_u;
    m.service.mean = mean_v;
    m.service.variance = service.scv * mean_v * mean_v;
    m.sigma2 = m.arrival.variance + m.service.variance;
    return m;
}

}  // namespace critiq
