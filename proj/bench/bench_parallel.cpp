// Times the data-parallel kernels in serial and OpenMP mode and verifies that
// both modes produce bitwise-identical results.
//
//   sif_bench [--threads N] [--repeat R]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "sif/gmm.hpp"
#include "sif/interpolant.hpp"
#include "sif/mlp.hpp"
#include "sif/rng.hpp"
#include "sif/sampler.hpp"
#include "sif/stats.hpp"
#include "sif/threading.hpp"

using namespace sif;
using Clock = std::chrono::steady_clock;

namespace {

struct Timing {
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    bool bitwise_equal = true;
};

template <class F>
double time_ms(F&& fn, int repeat) {
    double best = 1e300;
    for (int r = 0; r < repeat; ++r) {
        const auto t0 = Clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    return best;
}

void report(const char* name, const Timing& t) {
    std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name,
                t.serial_ms, t.parallel_ms, t.serial_ms / t.parallel_ms,
                t.bitwise_equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    int repeat = 3;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::strcmp(argv[i], "--threads") == 0) set_max_threads(std::atoi(argv[i + 1]));
        if (std::strcmp(argv[i], "--repeat") == 0) repeat = std::atoi(argv[i + 1]);
    }
    std::printf("worker cap: %d\n", max_threads());

    GmmSpec spec;
    spec.dim = 2;
    spec.weights = {0.4, 0.6};
    spec.means = {1.0, -0.5, -1.2, 0.8};
    spec.covariances = {0.6, 0.1, 0.1, 0.5, 0.8, -0.2, -0.2, 0.7};
    const Schedule sched = Schedule::quadratic_beta(1.0);
    const AnalyticGmmDrift oracle(spec, sched);
    const DiffusionSchedule diff = DiffusionSchedule::follmer(sched);

    // shared random batch
    const std::int64_t n = 20000;
    rng::Stream stream(1);
    const GmmSampler sampler(spec);
    std::vector<double> x0(n * 2), x1(n * 2), s(n), z(n * 2);
    for (std::int64_t k = 0; k < n; ++k) {
        sampler.sample(stream, std::span(x0).subspan(k * 2, 2));
        sampler.sample(stream, std::span(x1).subspan(k * 2, 2));
        s[k] = stream.uniform();
        z[k * 2] = stream.normal();
        z[k * 2 + 1] = stream.normal();
    }
    const PairsView batch{x0, x1, 2, n};

    {
        Timing t;
        double ls = 0.0, lp = 0.0;
        t.serial_ms =
            time_ms([&] { ls = empirical_loss(sched, oracle, batch, s, z, Exec::serial); }, repeat);
        t.parallel_ms =
            time_ms([&] { lp = empirical_loss(sched, oracle, batch, s, z, Exec::parallel); }, repeat);
        t.bitwise_equal = ls == lp;
        report("empirical_loss", t);
    }

    {
        MlpConfig mc;
        mc.input = 5;
        mc.output = 2;
        mc.hidden = {96, 96, 96};
        NeuralDrift net(mc);
        net.init_params(3);
        rng::Stream ps(4);
        for (auto& p : net.params()) p += 0.05 * ps.normal();
        std::vector<double> gs(net.param_count()), gp(net.param_count());
        Timing t;
        t.serial_ms =
            time_ms([&] { loss_gradient(net, sched, batch, s, z, gs, Exec::serial); }, repeat);
        t.parallel_ms =
            time_ms([&] { loss_gradient(net, sched, batch, s, z, gp, Exec::parallel); }, repeat);
        t.bitwise_equal = gs == gp;
        report("loss_gradient", t);
    }

    {
        SamplerConfig cfg;
        cfg.steps = 100;
        cfg.ensemble = 2000;
        cfg.seed = 7;
        const std::vector<double> q{0.3, -0.1};
        ForecastEnsemble es, ep;
        Timing t;
        t.serial_ms = time_ms([&] { es = sample_ensemble(oracle, diff, cfg, q, Exec::serial); },
                              repeat);
        t.parallel_ms =
            time_ms([&] { ep = sample_ensemble(oracle, diff, cfg, q, Exec::parallel); }, repeat);
        t.bitwise_equal = es.samples == ep.samples;
        report("sample_ensemble", t);
    }

    {
        std::vector<double> a(x0.begin(), x0.begin() + 1200 * 2);
        std::vector<double> b(x1.begin(), x1.begin() + 1200 * 2);
        double ps = 0.0, pp = 0.0;
        Timing t;
        t.serial_ms = time_ms(
            [&] { ps = energy_distance_test(a, 1200, b, 1200, 2, 99, 5, Exec::serial); }, repeat);
        t.parallel_ms = time_ms(
            [&] { pp = energy_distance_test(a, 1200, b, 1200, 2, 99, 5, Exec::parallel); },
            repeat);
        t.bitwise_equal = ps == pp;
        report("energy_distance_test", t);
    }

    {
        std::vector<double> p(40000), q(40000);
        rng::Stream ks(9);
        for (auto& v : p) v = ks.normal();
        for (auto& v : q) v = 0.3 + ks.normal();
        KdeKlResult rs, rp;
        Timing t;
        t.serial_ms = time_ms([&] { rs = kde_kl(p, q, 512, 50, 3, Exec::serial); }, repeat);
        t.parallel_ms = time_ms([&] { rp = kde_kl(p, q, 512, 50, 3, Exec::parallel); }, repeat);
        t.bitwise_equal = rs.kl == rp.kl && rs.bootstrap_std == rp.bootstrap_std;
        report("kde_kl", t);
    }

    return 0;
}
