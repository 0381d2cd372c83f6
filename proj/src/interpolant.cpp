#include "sif/interpolant.hpp"

#include <cmath>
#include <stdexcept>

namespace sif {

void interpolate_into(const Schedule& sched, std::span<const double> x0,
                      std::span<const double> x1, double s, std::span<const double> z,
                      std::span<double> point, std::span<double> target) {
    const std::size_t d = x0.size();
    if (x1.size() != d || z.size() != d || point.size() != d || target.size() != d)
        throw std::invalid_argument("interpolate: dimension mismatch");
    const ScheduleValues v = sched.at(s);
    const double rs = std::sqrt(s);
    for (std::size_t i = 0; i < d; ++i) {
        point[i] = v.alpha * x0[i] + v.beta * x1[i] + rs * v.sigma * z[i];
        target[i] = v.dalpha * x0[i] + v.dbeta * x1[i] + rs * v.dsigma * z[i];
    }
}

InterpolantDraw interpolate(const Schedule& sched, const SamplePair& pair, double s,
                            std::span<const double> z) {
    InterpolantDraw draw;
    draw.s = s;
    draw.noise.assign(z.begin(), z.end());
    draw.point.resize(pair.x0.size());
    draw.target.resize(pair.x0.size());
    interpolate_into(sched, pair.x0, pair.x1, s, z, draw.point, draw.target);
    return draw;
}

double empirical_loss(const Schedule& sched, const DriftField& drift, PairsView batch,
                      std::span<const double> s_draws, std::span<const double> z_draws,
                      Exec exec) {
    const std::int64_t n = batch.count;
    const int d = batch.dim;
    if (n < 1) throw std::invalid_argument("empirical_loss: empty batch");
    if (static_cast<std::int64_t>(s_draws.size()) != n ||
        static_cast<std::int64_t>(z_draws.size()) != n * d ||
        static_cast<std::int64_t>(batch.x0.size()) != n * d ||
        static_cast<std::int64_t>(batch.x1.size()) != n * d)
        throw std::invalid_argument("empirical_loss: draw/batch size mismatch");

    std::vector<double> terms(static_cast<std::size_t>(n));
    parallel_for(n, exec, [&](std::int64_t k) {
        std::vector<double> point(d), target(d), b(d);
        const auto x0 = batch.x0.subspan(k * d, d);
        const auto x1 = batch.x1.subspan(k * d, d);
        interpolate_into(sched, x0, x1, s_draws[k], z_draws.subspan(k * d, d), point,
                         target);
        drift.eval(s_draws[k], point, x0, b);
        double e = 0.0;
        for (int i = 0; i < d; ++i) {
            const double r = b[i] - target[i];
            e += r * r;
        }
        terms[static_cast<std::size_t>(k)] = e;
    });
    return pairwise_sum(terms) / static_cast<double>(n);
}

}  // namespace sif
