#pragma once

// Seeded sampling and statistically honest estimation.
//
// Every estimate is split over a fixed number of logical shards (64); shard s
// of a spec draws from the stream keyed (master_seed, stream_id, s).  Worker
// threads only decide which shards run where, and shard results are merged in
// shard order, so an estimate is a pure function of (spec, inputs) no matter
// how many workers run it.
//
// Confidence intervals are exact Clopper-Pearson at the 99% level: the
// verification checks compare tiny tail probabilities one-sidedly, where a
// Wald/Wilson interval undercovers.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "deckit/rng.hpp"

namespace deckit {

inline constexpr int kLogicalShards = 64;

enum class Dist { rademacher, gaussian, biased };

inline const char* to_string(Dist d) {
    switch (d) {
        case Dist::rademacher: return "rademacher";
        case Dist::gaussian: return "gaussian";
        case Dist::biased: return "biased";
    }
    return "?";
}

struct SampleSpec {
    Dist distribution = Dist::rademacher;
    int n = 0;
    std::int64_t count = 1;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
    // biased only: coordinate i is +1 with probability 1-lambda where
    // sign_pattern[i] >= 0, and with probability lambda where it is < 0.
    double lambda = 0.5;
    std::vector<int> sign_pattern;

    void validate() const {
        if (n < 0) throw std::invalid_argument("SampleSpec: negative dimension");
        if (count < 1) throw std::invalid_argument("SampleSpec: count must be >= 1");
        if (distribution == Dist::biased) {
            if (!(lambda > 0.0 && lambda <= 0.5))
                throw std::invalid_argument("SampleSpec: biased lambda must lie in (0, 1/2]");
            if (!sign_pattern.empty() && static_cast<int>(sign_pattern.size()) != n)
                throw std::invalid_argument("SampleSpec: sign pattern length mismatch");
        }
    }

    double prob_plus(int i) const {
        const bool toward_plus = sign_pattern.empty() || sign_pattern[static_cast<std::size_t>(i)] >= 0;
        return toward_plus ? 1.0 - lambda : lambda;
    }
};

namespace detail {

inline std::int64_t shard_quota(std::int64_t count, int shard) {
    const std::int64_t base = count / kLogicalShards;
    const std::int64_t extra = count % kLogicalShards;
    return base + (shard < extra ? 1 : 0);
}

inline void fill_point(const SampleSpec& spec, Rng& rng, double* out) {
    switch (spec.distribution) {
        case Dist::rademacher:
            for (int i = 0; i < spec.n; ++i) out[i] = rng.next_rademacher();
            break;
        case Dist::gaussian:
            for (int i = 0; i < spec.n; ++i) out[i] = rng.next_gaussian();
            break;
        case Dist::biased:
            for (int i = 0; i < spec.n; ++i)
                out[i] = rng.next_unit() <= spec.prob_plus(i) ? 1.0 : -1.0;
            break;
    }
}

// Runs fn(shard, rng, quota) for every shard, on up to `workers` threads,
// with per-shard state merged by the caller in shard order.
template <typename Fn>
void run_sharded(const SampleSpec& spec, int workers, Fn&& fn) {
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    const int nthreads = std::min(workers, kLogicalShards);
    if (nthreads == 1) {
        for (int s = 0; s < kLogicalShards; ++s) {
            Rng rng(spec.master_seed, spec.stream_id, static_cast<std::uint64_t>(s));
            fn(s, rng, shard_quota(spec.count, s));
        }
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            for (int s = t; s < kLogicalShards; s += nthreads) {
                Rng rng(spec.master_seed, spec.stream_id, static_cast<std::uint64_t>(s));
                fn(s, rng, shard_quota(spec.count, s));
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Materialized sample stream in estimation order (shard 0 first).  Intended
// for inspection and tests; the estimators below generate the same points
// on the fly.
class SampleStream {
public:
    explicit SampleStream(SampleSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        rng_ = Rng(spec_.master_seed, spec_.stream_id, 0);
        remaining_in_shard_ = detail::shard_quota(spec_.count, 0);
    }

    bool next(std::vector<double>& point) {
        if (produced_ == spec_.count) return false;
        while (remaining_in_shard_ == 0) {
            ++shard_;
            rng_ = Rng(spec_.master_seed, spec_.stream_id, static_cast<std::uint64_t>(shard_));
            remaining_in_shard_ = detail::shard_quota(spec_.count, shard_);
        }
        point.resize(static_cast<std::size_t>(spec_.n));
        detail::fill_point(spec_, rng_, point.data());
        --remaining_in_shard_;
        ++produced_;
        return true;
    }

private:
    SampleSpec spec_;
    Rng rng_{0};
    int shard_ = 0;
    std::int64_t remaining_in_shard_ = 0;
    std::int64_t produced_ = 0;
};

// --- Exact binomial confidence interval --------------------------------------

namespace detail {

inline double ln_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Regularized incomplete beta I_x(a,b) via the Lentz continued fraction.
inline double beta_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h;
}

inline double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front =
        std::exp(a * std::log(x) + b * std::log1p(-x) - ln_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - ln_beta(b, a)) *
                     beta_cf(b, a, 1.0 - x) / b;
}

// Quantile by bisection; inc_beta is monotone in x.
inline double inc_beta_inv(double a, double b, double p) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (inc_beta(a, b, mid) < p) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

struct BinomialCi {
    double low = 0.0;
    double high = 1.0;
};

inline BinomialCi clopper_pearson(std::int64_t hits, std::int64_t count, double level = 0.99) {
    if (count < 1 || hits < 0 || hits > count)
        throw std::invalid_argument("clopper_pearson: bad counts");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("clopper_pearson: bad level");
    const double a2 = (1.0 - level) / 2.0;
    const double h = static_cast<double>(hits);
    const double n = static_cast<double>(count);
    BinomialCi ci;
    ci.low = (hits == 0) ? 0.0 : detail::inc_beta_inv(h, n - h + 1.0, a2);
    ci.high = (hits == count) ? 1.0 : detail::inc_beta_inv(h + 1.0, n - h, 1.0 - a2);
    return ci;
}

// Standard normal upper tail Q(u) = Pr[N(0,1) > u].
inline double normal_q(double u) { return 0.5 * std::erfc(u / 1.4142135623730950488); }

// --- Estimators ---------------------------------------------------------------

struct TailEstimate {
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::int64_t count = 0;
    std::int64_t hits = 0;
    SampleSpec spec;
};

struct MomentEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int power = 2;
    std::int64_t count = 0;
    SampleSpec spec;
};

// Pr[|f(x)| > t] with exact 99% binomial interval.  The evaluator must be a
// pure function of the point.
template <typename Evaluator>
TailEstimate estimate_tail(Evaluator&& f, const SampleSpec& spec, double t, int workers = 1) {
    spec.validate();
    if (t < 0.0) throw std::invalid_argument("estimate_tail: threshold must be >= 0");
    std::vector<std::int64_t> shard_hits(kLogicalShards, 0);
    detail::run_sharded(spec, workers, [&](int shard, Rng& rng, std::int64_t quota) {
        std::vector<double> point(static_cast<std::size_t>(spec.n));
        std::int64_t h = 0;
        for (std::int64_t i = 0; i < quota; ++i) {
            detail::fill_point(spec, rng, point.data());
            if (std::fabs(f(point.data())) > t) ++h;
        }
        shard_hits[static_cast<std::size_t>(shard)] = h;
    });
    TailEstimate est;
    est.spec = spec;
    est.count = spec.count;
    for (int s = 0; s < kLogicalShards; ++s) est.hits += shard_hits[static_cast<std::size_t>(s)];
    est.p_hat = static_cast<double>(est.hits) / static_cast<double>(est.count);
    const BinomialCi ci = clopper_pearson(est.hits, est.count);
    est.ci_low = ci.low;
    est.ci_high = ci.high;
    return est;
}

// Sample mean of |f|^p for even p, with jackknife standard error (for the
// mean statistic the leave-one-out formula reduces to
// sqrt(sum (x - xbar)^2 / (n (n-1))), computed from shard-merged sums).
template <typename Evaluator>
MomentEstimate estimate_moment(Evaluator&& f, const SampleSpec& spec, int power,
                               int workers = 1) {
    spec.validate();
    if (power != 2 && power != 4 && power != 6 && power != 8)
        throw std::invalid_argument("estimate_moment: power must be one of {2,4,6,8}");
    std::vector<double> shard_sum(kLogicalShards, 0.0);
    std::vector<double> shard_sumsq(kLogicalShards, 0.0);
    detail::run_sharded(spec, workers, [&](int shard, Rng& rng, std::int64_t quota) {
        std::vector<double> point(static_cast<std::size_t>(spec.n));
        double sum = 0.0, sumsq = 0.0;
        for (std::int64_t i = 0; i < quota; ++i) {
            detail::fill_point(spec, rng, point.data());
            const double v = f(point.data());
            const double v2 = v * v;
            double m = v2;
            for (int p = 2; p < power; p += 2) m *= v2;
            sum += m;
            sumsq += m * m;
        }
        shard_sum[static_cast<std::size_t>(shard)] = sum;
        shard_sumsq[static_cast<std::size_t>(shard)] = sumsq;
    });
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < kLogicalShards; ++s) {
        sum += shard_sum[static_cast<std::size_t>(s)];
        sumsq += shard_sumsq[static_cast<std::size_t>(s)];
    }
    MomentEstimate est;
    est.spec = spec;
    est.power = power;
    est.count = spec.count;
    const double n = static_cast<double>(spec.count);
    est.mean = sum / n;
    if (spec.count > 1) {
        const double ss = std::max(0.0, sumsq - sum * sum / n);
        est.std_error = std::sqrt(ss / (n * (n - 1.0)));
    }
    return est;
}

}  // namespace deckit
