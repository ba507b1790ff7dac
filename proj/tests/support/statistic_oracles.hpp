#pragma once
// Extended-precision reference evaluations of the detection statistics,
// written directly from their definitions. Shared by unit and acceptance tests.

#include "vlad/detector.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vlad::testing {

using LD = long double;

inline std::vector<LD> oracle_clamp(const std::vector<double>& p)
{
    std::vector<LD> out(p.size());
    LD sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += (out[i] = std::max<LD>(p[i], 1e-12L));
    for (auto& v : out) v /= sum;
    return out;
}

// KL both ways, term by term, then averaged.
inline LD oracle_symkl(const std::vector<double>& p, const std::vector<double>& q)
{
    const auto a = oracle_clamp(p);
    const auto b = oracle_clamp(q);
    LD fwd = 0, rev = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        fwd += a[i] * std::log(a[i] / b[i]);
        rev += b[i] * std::log(b[i] / a[i]);
    }
    return (fwd + rev) / 2;
}

inline std::vector<double> oracle_one_hot(const std::vector<double>& p)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[best]) best = i;
    }
    std::vector<double> out(p.size(), 1e-12);
    out[best] = static_cast<double>(1.0L - static_cast<LD>(p.size() - 1) * 1e-12L);
    return out;
}

inline std::vector<LD> l2n(const std::vector<double>& p)
{
    LD n = 0;
    for (double v : p) n += static_cast<LD>(v) * v;
    n = std::sqrt(n);
    std::vector<LD> out;
    for (double v : p) out.push_back(v / n);
    return out;
}

inline LD oracle_score(const std::vector<double>& pa, const std::vector<double>& pc, ScoreVariant v)
{
    switch (v) {
    case ScoreVariant::vlad1: return oracle_symkl(pa, pc);
    case ScoreVariant::vlad2: return oracle_symkl(oracle_one_hot(pa), pc);
    case ScoreVariant::a1: {
        const auto a = l2n(pa), c = l2n(pc);
        return std::fabs(*std::max_element(a.begin(), a.end()) - *std::max_element(c.begin(), c.end()));
    }
    case ScoreVariant::a2:
        return std::fabs(static_cast<LD>(*std::max_element(pa.begin(), pa.end())) - *std::max_element(pc.begin(), pc.end()));
    case ScoreVariant::a3: {
        const auto a = l2n(pa), c = l2n(pc);
        LD s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - c[i]);
        return s;
    }
    case ScoreVariant::a4: {
        LD s = 0;
        for (std::size_t i = 0; i < pa.size(); ++i) s += std::fabs(static_cast<LD>(pa[i]) - pc[i]);
        return s;
    }
    default: return -1;
    }
}

inline const ScoreVariant kStatVariants[] = {ScoreVariant::vlad1, ScoreVariant::vlad2, ScoreVariant::a1,
                                      ScoreVariant::a2,    ScoreVariant::a3,    ScoreVariant::a4};

}  // namespace vlad::testing
