#include "sif/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sif/rng.hpp"

namespace sif {

namespace {

constexpr double kDensityFloor = 1e-12;

double scott_bandwidth(std::span<const double> samples) {
    const double sd = std::sqrt(variance_of(samples));
    if (!(sd > 0.0))
        throw std::invalid_argument("kde: degenerate samples (zero variance)");
    return sd * std::pow(static_cast<double>(samples.size()), -0.2);
}

// KL(p||q) by trapezoid quadrature after renormalizing both curves on the grid.
double grid_kl(std::span<const double> grid, std::span<const double> p,
               std::span<const double> q) {
    const std::size_t n = grid.size();
    auto trapz = [&](auto&& f) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            acc += 0.5 * (grid[i + 1] - grid[i]) * (f(i) + f(i + 1));
        return acc;
    };
    const double zp = trapz([&](std::size_t i) { return p[i]; });
    const double zq = trapz([&](std::size_t i) { return q[i]; });
    return trapz([&](std::size_t i) {
        const double pi = std::max(p[i] / zp, kDensityFloor);
        const double qi = std::max(q[i] / zq, kDensityFloor);
        return pi * std::log(pi / qi);
    });
}

}  // namespace

double mean_of(std::span<const double> v) {
    return pairwise_sum(v) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("variance_of: need >= 2 samples");
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / (static_cast<double>(v.size()) - 1.0);
}

Kde1d Kde1d::fit(std::span<const double> samples, int grid_points, double bandwidth,
                 Exec exec) {
    if (samples.size() < 2) throw std::invalid_argument("kde: need >= 2 samples");
    const double h = bandwidth > 0.0 ? bandwidth : scott_bandwidth(samples);
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it - 3.0 * h;
    const double hi = *hi_it + 3.0 * h;
    std::vector<double> grid(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);
    return fit_on_grid(samples, grid, h, exec);
}

namespace {

bool uniform_spacing(std::span<const double> grid, double* step) {
    if (grid.size() < 2) return false;
    const double dg = (grid.back() - grid.front()) / (grid.size() - 1);
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (std::abs(grid[i] - grid[i - 1] - dg) > 1e-9 * std::max(1.0, std::abs(dg)))
            return false;
    *step = dg;
    return true;
}

}  // namespace

Kde1d Kde1d::fit_on_grid(std::span<const double> samples, std::span<const double> grid,
                         double bandwidth, Exec exec) {
    if (samples.size() < 2) throw std::invalid_argument("kde: need >= 2 samples");
    const double h = bandwidth > 0.0 ? bandwidth : scott_bandwidth(samples);
    Kde1d kde;
    kde.bandwidth = h;
    kde.grid.assign(grid.begin(), grid.end());
    kde.density.assign(grid.size(), 0.0);
    const double norm =
        1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));

    // Large sample sets on a uniform grid use linear binning plus a banded
    // kernel convolution; the binning error is quadratic in the grid spacing
    // and far below the bootstrap noise at the sizes involved.
    double dg = 0.0;
    if (samples.size() > 5000 && uniform_spacing(grid, &dg) && dg > 0.0) {
        const std::int64_t g_count = static_cast<std::int64_t>(grid.size());
        std::vector<double> mass(grid.size(), 0.0);
        const double lo = grid.front();
        for (double x : samples) {
            double t = (x - lo) / dg;
            if (t <= 0.0) {
                mass.front() += 1.0;
                continue;
            }
            if (t >= static_cast<double>(g_count - 1)) {
                mass.back() += 1.0;
                continue;
            }
            const auto i0 = static_cast<std::size_t>(t);
            const double frac = t - static_cast<double>(i0);
            mass[i0] += 1.0 - frac;
            mass[i0 + 1] += frac;
        }
        const auto half_width =
            std::min<std::int64_t>(g_count - 1,
                                   static_cast<std::int64_t>(std::ceil(8.0 * h / dg)));
        std::vector<double> kernel(static_cast<std::size_t>(half_width) + 1);
        for (std::int64_t m = 0; m <= half_width; ++m) {
            const double u = m * dg / h;
            kernel[m] = std::exp(-0.5 * u * u);
        }
        parallel_for(g_count, exec, [&](std::int64_t g) {
            double acc = 0.0;
            const std::int64_t mlo = std::max<std::int64_t>(0, g - half_width);
            const std::int64_t mhi = std::min<std::int64_t>(g_count - 1, g + half_width);
            for (std::int64_t j = mlo; j <= mhi; ++j)
                acc += mass[j] * kernel[std::llabs(g - j)];
            kde.density[g] = norm * acc;
        });
        return kde;
    }

    parallel_for(static_cast<std::int64_t>(grid.size()), exec, [&](std::int64_t g) {
        double acc = 0.0;
        for (double x : samples) {
            const double u = (kde.grid[g] - x) / h;
            acc += std::exp(-0.5 * u * u);
        }
        kde.density[g] = norm * acc;
    });
    return kde;
}

double Kde1d::integral() const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        acc += 0.5 * (grid[i + 1] - grid[i]) * (density[i] + density[i + 1]);
    return acc;
}

KdeKlResult kde_kl(std::span<const double> samples_p, std::span<const double> samples_q,
                   int grid_points, int n_bootstrap, std::uint64_t seed, Exec exec) {
    if (samples_p.size() < 100 || samples_q.size() < 100)
        throw std::invalid_argument("kde_kl: need >= 100 samples per set");
    const double hp = scott_bandwidth(samples_p);
    const double hq = scott_bandwidth(samples_q);
    const double pad = 3.0 * std::max(hp, hq);
    const auto [plo, phi] = std::minmax_element(samples_p.begin(), samples_p.end());
    const auto [qlo, qhi] = std::minmax_element(samples_q.begin(), samples_q.end());
    const double lo = std::min(*plo, *qlo) - pad;
    const double hi = std::max(*phi, *qhi) + pad;
    std::vector<double> grid(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);

    KdeKlResult result;
    result.grid = grid;
    {
        const Kde1d p = Kde1d::fit_on_grid(samples_p, grid, hp, exec);
        const Kde1d q = Kde1d::fit_on_grid(samples_q, grid, hq, exec);
        result.density_p = p.density;
        result.density_q = q.density;
        result.kl = grid_kl(grid, p.density, q.density);
    }

    if (n_bootstrap > 1) {
        std::vector<double> kls(static_cast<std::size_t>(n_bootstrap));
        parallel_for(n_bootstrap, exec, [&](std::int64_t b) {
            rng::Stream stream = rng::Stream::keyed(seed, 0xb007, b);
            std::vector<double> rp(samples_p.size()), rq(samples_q.size());
            for (auto& x : rp) x = samples_p[stream.index_below(samples_p.size())];
            for (auto& x : rq) x = samples_q[stream.index_below(samples_q.size())];
            const Kde1d p = Kde1d::fit_on_grid(rp, grid, hp, Exec::serial);
            const Kde1d q = Kde1d::fit_on_grid(rq, grid, hq, Exec::serial);
            kls[static_cast<std::size_t>(b)] = grid_kl(grid, p.density, q.density);
        });
        result.bootstrap_std = std::sqrt(variance_of(kls));
    }
    return result;
}

ErrorReport conditional_moment_errors(std::span<const double> ensemble, std::int64_t m,
                                      std::span<const double> reference, std::int64_t r,
                                      int dim) {
    if (m < 2 || r < 2) throw std::invalid_argument("moment_errors: need >= 2 members");
    if (static_cast<std::int64_t>(ensemble.size()) != m * dim ||
        static_cast<std::int64_t>(reference.size()) != r * dim)
        throw std::invalid_argument("moment_errors: dimension mismatch");

    std::vector<double> mean_e(dim, 0.0), mean_r(dim, 0.0), std_e(dim, 0.0), std_r(dim, 0.0);
    for (std::int64_t k = 0; k < m; ++k)
        for (int i = 0; i < dim; ++i) mean_e[i] += ensemble[k * dim + i];
    for (double& v : mean_e) v /= static_cast<double>(m);
    for (std::int64_t k = 0; k < r; ++k)
        for (int i = 0; i < dim; ++i) mean_r[i] += reference[k * dim + i];
    for (double& v : mean_r) v /= static_cast<double>(r);
    for (std::int64_t k = 0; k < m; ++k)
        for (int i = 0; i < dim; ++i) {
            const double d = ensemble[k * dim + i] - mean_e[i];
            std_e[i] += d * d;
        }
    for (int i = 0; i < dim; ++i) std_e[i] = std::sqrt(std_e[i] / (m - 1.0));
    for (std::int64_t k = 0; k < r; ++k)
        for (int i = 0; i < dim; ++i) {
            const double d = reference[k * dim + i] - mean_r[i];
            std_r[i] += d * d;
        }
    for (int i = 0; i < dim; ++i) std_r[i] = std::sqrt(std_r[i] / (r - 1.0));

    double dm = 0.0, nm = 0.0, ds = 0.0, ns = 0.0;
    for (int i = 0; i < dim; ++i) {
        dm += (mean_e[i] - mean_r[i]) * (mean_e[i] - mean_r[i]);
        nm += mean_r[i] * mean_r[i];
        ds += (std_e[i] - std_r[i]) * (std_e[i] - std_r[i]);
        ns += std_r[i] * std_r[i];
    }
    ErrorReport report;
    const double ref_mean_norm = std::sqrt(nm);
    if (ref_mean_norm < 1e-12) {
        report.mean_reference_near_zero = true;
        report.err_mean = std::sqrt(dm);
    } else {
        report.err_mean = std::sqrt(dm) / ref_mean_norm;
    }
    report.err_std = std::sqrt(ds) / std::sqrt(ns);
    return report;
}

double energy_distance(std::span<const double> a, std::int64_t na,
                       std::span<const double> b, std::int64_t nb, int dim, Exec exec) {
    if (na < 2 || nb < 2)
        throw std::invalid_argument("energy_distance: need >= 2 samples per set");
    if (static_cast<std::int64_t>(a.size()) != na * dim ||
        static_cast<std::int64_t>(b.size()) != nb * dim)
        throw std::invalid_argument("energy_distance: span size does not match count*dim");
    std::vector<double> cross(static_cast<std::size_t>(na));
    parallel_for(na, exec, [&](std::int64_t i) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < nb; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double d = a[i * dim + c] - b[j * dim + c];
                d2 += d * d;
            }
            acc += std::sqrt(d2);
        }
        cross[static_cast<std::size_t>(i)] = acc;
    });
    std::vector<double> within_a(static_cast<std::size_t>(na));
    parallel_for(na, exec, [&](std::int64_t i) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < na; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double d = a[i * dim + c] - a[j * dim + c];
                d2 += d * d;
            }
            acc += std::sqrt(d2);
        }
        within_a[static_cast<std::size_t>(i)] = acc;
    });
    std::vector<double> within_b(static_cast<std::size_t>(nb));
    parallel_for(nb, exec, [&](std::int64_t i) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < nb; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double d = b[i * dim + c] - b[j * dim + c];
                d2 += d * d;
            }
            acc += std::sqrt(d2);
        }
        within_b[static_cast<std::size_t>(i)] = acc;
    });
    const double eab = pairwise_sum(cross) / (static_cast<double>(na) * nb);
    const double eaa = pairwise_sum(within_a) / (static_cast<double>(na) * na);
    const double ebb = pairwise_sum(within_b) / (static_cast<double>(nb) * nb);
    return 2.0 * eab - eaa - ebb;
}

double energy_distance_test(std::span<const double> a, std::int64_t na,
                            std::span<const double> b, std::int64_t nb, int dim,
                            int n_permutations, std::uint64_t seed, Exec exec) {
    if (na < 2 || nb < 2)
        throw std::invalid_argument("energy_distance_test: need >= 2 samples per set");
    if (static_cast<std::int64_t>(a.size()) != na * dim ||
        static_cast<std::int64_t>(b.size()) != nb * dim)
        throw std::invalid_argument(
            "energy_distance_test: span size does not match count*dim");
    if (n_permutations < 1)
        throw std::invalid_argument("energy_distance_test: need >= 1 permutation");
    const std::int64_t n = na + nb;
    std::vector<double> pooled(static_cast<std::size_t>(n) * dim);
    std::copy(a.begin(), a.end(), pooled.begin());
    std::copy(b.begin(), b.end(), pooled.begin() + na * dim);

    {  // degenerate pool guard
        bool varies = false;
        for (std::int64_t i = 1; i < n && !varies; ++i)
            for (int c = 0; c < dim; ++c)
                if (pooled[i * dim + c] != pooled[c]) {
                    varies = true;
                    break;
                }
        if (!varies)
            throw std::invalid_argument("energy_distance_test: degenerate pooled sample");
    }

    std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
    parallel_for(n, exec, [&](std::int64_t i) {
        for (std::int64_t j = 0; j < n; ++j) {
            double d2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double d = pooled[i * dim + c] - pooled[j * dim + c];
                d2 += d * d;
            }
            dist[i * n + j] = std::sqrt(d2);
        }
    });

    auto statistic = [&](const std::vector<std::uint8_t>& is_a) {
        double dab = 0.0, daa = 0.0, dbb = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double* row = dist.data() + i * n;
            for (std::int64_t j = i + 1; j < n; ++j) {
                if (is_a[i] != is_a[j])
                    dab += row[j];
                else if (is_a[i])
                    daa += row[j];
                else
                    dbb += row[j];
            }
        }
        return 2.0 * (2.0 * dab) / (static_cast<double>(na) * nb) -
               (2.0 * daa) / (static_cast<double>(na) * na) -
               (2.0 * dbb) / (static_cast<double>(nb) * nb);
    };

    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n), 0);
    for (std::int64_t i = 0; i < na; ++i) labels[i] = 1;
    const double observed = statistic(labels);

    std::vector<std::uint8_t> exceed(static_cast<std::size_t>(n_permutations), 0);
    parallel_for(n_permutations, exec, [&](std::int64_t p) {
        rng::Stream stream = rng::Stream::keyed(seed, 0x9e37, p);
        std::vector<std::uint8_t> perm(labels);
        stream.shuffle(std::span<std::uint8_t>(perm));
        exceed[static_cast<std::size_t>(p)] = statistic(perm) >= observed ? 1 : 0;
    });
    std::int64_t count = 0;
    for (auto e : exceed) count += e;
    return (1.0 + static_cast<double>(count)) / (1.0 + n_permutations);
}

}  // namespace sif
