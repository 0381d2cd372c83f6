// sif: probabilistic forecasting of dynamical systems with interpolant SDEs.
//
// Subcommands: gen-data, train, forecast, eval, spectra. Every run re-emits
// its resolved configuration (with a version stamp and config hash) into the
// output directory, and all randomness is derived from the config seed, so
// reruns are byte-identical.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 numerical abort.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sif/dataset.hpp"
#include "sif/errors.hpp"
#include "sif/gmm.hpp"
#include "sif/interpolant.hpp"
#include "sif/io.hpp"
#include "sif/jump_diffusion.hpp"
#include "sif/mlp.hpp"
#include "sif/navier_stokes.hpp"
#include "sif/sampler.hpp"
#include "sif/stats.hpp"
#include "sif/threading.hpp"
#include "sif/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string output_dir;   // overrides config output_dir when set
    std::int64_t seed = -1;   // overrides config seed when >= 0
    int threads = 0;
    bool serial = false;
    std::vector<std::string> overrides;  // key.path=value pairs
};

sif::Exec exec_mode(const GlobalOptions& g) {
    return g.serial ? sif::Exec::serial : sif::Exec::parallel;
}

json default_config() {
    json j;
    j["task"] = "gmm_synthetic";
    j["seed"] = 0;
    j["output_dir"] = "runs/out";
    j["schedule"] = {{"kind", "quadratic_beta"}, {"epsilon", 1.0}};
    j["diffusion"] = {{"kind", "match_sigma"}};
    j["data"] = {{"dir", "dataset"},
                 {"count", 10000},
                 {"lag", 0.5},
                 {"burn_in", 20.0},
                 {"x0_source", "gmm"},
                 {"gmm_spec_path", ""},
                 {"jump_rate", 2.0},
                 {"dt", 0.01},
                 {"grid", 64},
                 {"viscosity", 1e-3},
                 {"damping", 0.1},
                 {"forcing_amplitude", 1.0},
                 {"ns_dt", 1e-4},
                 {"snapshot_interval", 0.5},
                 {"snapshots", 24}};
    j["train"] = {{"batch", 512},
                  {"epochs", 40},
                  {"learning_rate", 1e-3},
                  {"weight_decay", 1e-6},
                  {"hidden", json::array({96, 96, 96})},
                  {"activation", "silu"},
                  {"validation_fraction", 0.1},
                  {"checkpoint", "model.ckpt"}};
    j["sampler"] = {{"steps", 200}, {"ensemble", 2000}, {"lags", 1}};
    return j;
}

void merge_into(json& base, const json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge_into(base[it.key()], *it);
        else
            base[it.key()] = *it;
    }
}

// --set a.b.c=value, parsed as JSON when possible, else kept as a string
void apply_override(json& cfg, const std::string& expr) {
    const auto eq = expr.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key.path=value, got: " + expr);
    const std::string path = expr.substr(0, eq);
    const std::string value = expr.substr(eq + 1);
    json* node = &cfg;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot - pos);
        if (dot == std::string::npos) {
            try {
                (*node)[key] = json::parse(value);
            } catch (const json::parse_error&) {
                (*node)[key] = value;
            }
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

json load_config(const GlobalOptions& g) {
    json cfg = default_config();
    if (!g.config_path.empty()) {
        if (!fs::exists(g.config_path))
            throw std::invalid_argument("config file not found: " + g.config_path);
        json user;
        try {
            user = json::parse(sif::io::read_text_file(g.config_path));
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("config parse error: " + std::string(e.what()));
        }
        merge_into(cfg, user);
    }
    for (const auto& ov : g.overrides) apply_override(cfg, ov);
    if (g.seed >= 0) cfg["seed"] = g.seed;
    if (!g.output_dir.empty()) cfg["output_dir"] = g.output_dir;
    if (!cfg.contains("seed") || !cfg["seed"].is_number())
        throw std::invalid_argument("config: a numeric seed is mandatory");
    return cfg;
}

sif::Schedule schedule_from(const json& cfg) {
    const auto& s = cfg.at("schedule");
    const std::string kind = s.at("kind").get<std::string>();
    const double epsilon = s.at("epsilon").get<double>();
    if (kind == "linear_beta") return sif::Schedule::linear_beta(epsilon);
    if (kind == "quadratic_beta") return sif::Schedule::quadratic_beta(epsilon);
    throw std::invalid_argument("config: unknown schedule kind " + kind);
}

sif::DiffusionSchedule diffusion_from(const json& cfg) {
    const std::string kind = cfg.at("diffusion").at("kind").get<std::string>();
    sif::Schedule sched = schedule_from(cfg);
    if (kind == "match_sigma") return sif::DiffusionSchedule::match_sigma(std::move(sched));
    if (kind == "follmer") return sif::DiffusionSchedule::follmer(std::move(sched));
    throw std::invalid_argument("config: unknown diffusion kind " + kind);
}

// Hash over the output-determining content; the workspace path is excluded so
// the same logical run hashes identically anywhere.
std::uint64_t config_hash(const json& cfg) {
    json canon = cfg;
    canon.erase("output_dir");
    return sif::io::fnv1a(canon.dump());
}

void emit_resolved_config(const json& cfg, const fs::path& dir) {
    json out = cfg;
    out["version"] = std::string(sif::kVersion);
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    out["config_hash"] = std::string(hex);
    fs::create_directories(dir);
    sif::io::write_text_file((dir / "resolved_config.json").string(), out.dump(2) + "\n");
}

fs::path dataset_dir(const json& cfg) {
    fs::path dir = cfg.at("data").at("dir").get<std::string>();
    if (dir.is_relative()) dir = fs::path(cfg.at("output_dir").get<std::string>()) / dir;
    return dir;
}

sif::GmmSpec gmm_spec_from(const json& cfg) {
    const std::string path = cfg.at("data").value("gmm_spec_path", std::string());
    if (path.empty()) return sif::GmmSpec::five_mode_ring();
    return sif::GmmSpec::from_json_text(sif::io::read_text_file(path));
}

void write_csv(const fs::path& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open " + path.string());
    out << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out << (i ? "," : "") << buf;
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const GlobalOptions& g) {
    const json cfg = load_config(g);
    const std::string task = cfg.at("task").get<std::string>();
    const auto& d = cfg.at("data");
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    const fs::path out_dir = dataset_dir(cfg);

    sif::TransitionDataset ds;
    if (task == "gmm_synthetic") {
        // footnote construction: the target is drawn independently of the
        // conditioning state, so the conditional law equals the mixture itself
        const sif::GmmSpec spec = gmm_spec_from(cfg);
        const std::int64_t n = d.at("count").get<std::int64_t>();
        if (n < 1) throw std::invalid_argument("gen-data: count must be >= 1");
        const std::string x0_source = d.value("x0_source", std::string("gmm"));
        const sif::GmmSampler sampler(spec);
        sif::rng::Stream stream = sif::rng::Stream::keyed(seed, 0x6e3);
        ds.dim = spec.dim;
        ds.lag = 0.0;
        ds.task = task;
        ds.x0.resize(n * spec.dim);
        ds.x1.resize(n * spec.dim);
        for (std::int64_t k = 0; k < n; ++k) {
            auto x0 = std::span(ds.x0).subspan(k * spec.dim, spec.dim);
            if (x0_source == "gmm")
                sampler.sample(stream, x0);
            else if (x0_source == "standard_normal")
                stream.normal_fill(x0);
            else
                throw std::invalid_argument("gen-data: unknown x0_source " + x0_source);
            sampler.sample(stream, std::span(ds.x1).subspan(k * spec.dim, spec.dim));
        }
        fs::create_directories(out_dir);
        sif::io::write_text_file((out_dir / "gmm_spec.json").string(),
                                 spec.to_json_text() + "\n");
    } else if (task == "jump_diffusion") {
        sif::JumpDiffusionConfig jd;
        jd.invariant = gmm_spec_from(cfg);
        jd.jump_rate = d.at("jump_rate").get<double>();
        jd.dt = d.at("dt").get<double>();
        jd.lag = d.at("lag").get<double>();
        jd.seed = seed;
        ds = sif::simulate_jump_diffusion(jd, d.at("count").get<std::int64_t>(),
                                          d.at("burn_in").get<double>());
        fs::create_directories(out_dir);
        sif::io::write_text_file((out_dir / "gmm_spec.json").string(),
                                 jd.invariant.to_json_text() + "\n");
    } else if (task == "navier_stokes") {
        sif::NavierStokesConfig ns;
        ns.grid = d.at("grid").get<int>();
        ns.viscosity = d.at("viscosity").get<double>();
        ns.damping = d.at("damping").get<double>();
        ns.forcing_amplitude = d.at("forcing_amplitude").get<double>();
        ns.dt = d.at("ns_dt").get<double>();
        ns.snapshot_interval = d.at("snapshot_interval").get<double>();
        ns.seed = seed;
        ds = sif::simulate_ns(ns, d.at("snapshots").get<std::int64_t>(),
                              d.at("burn_in").get<double>());
    } else {
        throw std::invalid_argument("gen-data: unknown task " + task);
    }

    ds.seed = seed;
    ds.config_hash = config_hash(cfg);
    ds.save(out_dir.string());

    // target states alone, handy as an evaluation reference set
    const std::int64_t shape[2] = {ds.size(), ds.dim};
    sif::io::write_array((out_dir / "targets.bin").string(), ds.x1, shape);
    emit_resolved_config(cfg, out_dir);
    std::printf("gen-data: wrote %lld pairs of dim %d to %s\n",
                static_cast<long long>(ds.size()), ds.dim, out_dir.string().c_str());
    return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const GlobalOptions& g, bool resume, int epoch_limit) {
    const json cfg = load_config(g);
    const auto& t = cfg.at("train");
    const fs::path out_dir = cfg.at("output_dir").get<std::string>();
    const fs::path data_dir = dataset_dir(cfg);
    const sif::TransitionDataset ds = sif::TransitionDataset::load(data_dir.string());
    const sif::Schedule sched = schedule_from(cfg);

    sif::MlpConfig mc;
    mc.input = 2 * ds.dim + 1;
    mc.output = ds.dim;
    mc.hidden = t.at("hidden").get<std::vector<int>>();
    const std::string act = t.value("activation", std::string("silu"));
    if (act == "silu")
        mc.activation = sif::Activation::silu;
    else if (act == "gelu")
        mc.activation = sif::Activation::gelu;
    else
        throw std::invalid_argument("train: unknown activation " + act);

    sif::TrainConfig tc;
    tc.batch = t.at("batch").get<std::int64_t>();
    tc.epochs = t.at("epochs").get<int>();
    tc.learning_rate = t.at("learning_rate").get<double>();
    tc.weight_decay = t.at("weight_decay").get<double>();
    tc.validation_fraction = t.value("validation_fraction", 0.1);
    tc.seed = cfg.at("seed").get<std::uint64_t>();

    const fs::path ckpt = out_dir / t.at("checkpoint").get<std::string>();
    const fs::path opt_state = ckpt.string() + ".opt";
    const fs::path history_csv = out_dir / "loss_history.csv";
    fs::create_directories(out_dir);

    sif::NeuralDrift model(mc);
    sif::TrainState state{sif::AdamW(model.param_count()), 0};
    if (resume) {
        if (!fs::exists(ckpt) || !fs::exists(opt_state))
            throw std::invalid_argument("train --resume: missing checkpoint or state at " +
                                        ckpt.string());
        sif::Checkpoint loaded = sif::load_checkpoint(ckpt.string());
        if (loaded.model.config().widths() != mc.widths())
            throw std::invalid_argument("train --resume: checkpoint architecture mismatch");
        model = std::move(loaded.model);
        state = sif::load_train_state(opt_state.string(), model.param_count());
        std::printf("train: resuming at epoch %d\n", state.next_epoch);
    } else {
        model.init_params(tc.seed);
    }

    const sif::TrainResult result =
        sif::train(model, sched, ds.view(), tc, exec_mode(g), &state, epoch_limit);

    sif::save_checkpoint(ckpt.string(), model, sched);
    sif::save_train_state(opt_state.string(), state);

    std::vector<std::vector<double>> rows;
    for (const auto& rec : result.history)
        rows.push_back({static_cast<double>(rec.epoch), rec.lr, rec.train_loss,
                        rec.val_loss, rec.grad_norm});
    std::ofstream hist(history_csv, resume ? std::ios::app : std::ios::trunc);
    if (!resume) hist << "epoch,lr,train_loss,val_loss,grad_norm\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            hist << (i ? "," : "") << buf;
        }
        hist << "\n";
    }
    hist.close();

    emit_resolved_config(cfg, out_dir);
    if (!result.history.empty())
        std::printf("train: %zu epochs, final train loss %.6g, val loss %.6g -> %s\n",
                    result.history.size(), result.history.back().train_loss,
                    result.history.back().val_loss, ckpt.string().c_str());
    return 0;
}

// ---------------------------------------------------------------- forecast

std::vector<std::vector<double>> load_x0_states(const std::string& source, int dim) {
    // either an array file ([d] or [n,d]) or dataset:<dir>:<index>
    std::vector<std::vector<double>> states;
    if (source.rfind("dataset:", 0) == 0) {
        const auto rest = source.substr(8);
        const auto colon = rest.rfind(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("forecast: expected dataset:<dir>:<index>");
        const std::string dir = rest.substr(0, colon);
        const std::int64_t index = std::stoll(rest.substr(colon + 1));
        const sif::TransitionDataset ds = sif::TransitionDataset::load(dir);
        if (ds.dim != dim)
            throw std::invalid_argument("forecast: dataset dim does not match checkpoint");
        if (index < 0 || index >= ds.size())
            throw std::invalid_argument("forecast: x0 index out of range");
        states.emplace_back(ds.x0.begin() + index * dim, ds.x0.begin() + (index + 1) * dim);
        return states;
    }
    const sif::io::Array arr = sif::io::read_array(source);
    if (arr.shape.size() == 1 && arr.shape[0] == dim) {
        states.emplace_back(arr.data);
    } else if (arr.shape.size() == 2 && arr.shape[1] == dim) {
        for (std::int64_t k = 0; k < arr.shape[0]; ++k)
            states.emplace_back(arr.data.begin() + k * dim,
                                arr.data.begin() + (k + 1) * dim);
    } else {
        throw std::invalid_argument("forecast: x0 file must be [d] or [n,d] with d=" +
                                    std::to_string(dim));
    }
    return states;
}

int cmd_forecast(const GlobalOptions& g, const std::string& checkpoint,
                 const std::string& x0_source, int lags, bool csv) {
    const json cfg = load_config(g);
    const fs::path out_dir = fs::path(cfg.at("output_dir").get<std::string>()) / "forecast";
    if (!fs::exists(checkpoint))
        throw std::invalid_argument("forecast: missing checkpoint " + checkpoint);
    const sif::Checkpoint loaded = sif::load_checkpoint(checkpoint);
    const sif::NeuralDriftField drift(loaded.model);

    // the sampling schedule comes from the checkpoint; the diffusion kind from config
    const std::string diff_kind = cfg.at("diffusion").at("kind").get<std::string>();
    const sif::DiffusionSchedule diffusion =
        diff_kind == "follmer" ? sif::DiffusionSchedule::follmer(loaded.schedule)
                               : sif::DiffusionSchedule::match_sigma(loaded.schedule);

    sif::SamplerConfig sc;
    sc.steps = cfg.at("sampler").at("steps").get<int>();
    sc.ensemble = cfg.at("sampler").at("ensemble").get<std::int64_t>();
    if (lags <= 0) lags = cfg.at("sampler").value("lags", 1);

    const int dim = loaded.model.state_dim();
    const auto states = load_x0_states(x0_source, dim);
    fs::create_directories(out_dir);

    json manifest;
    manifest["checkpoint"] = checkpoint;
    manifest["diffusion"] = diff_kind;
    manifest["steps"] = sc.steps;
    manifest["ensemble"] = sc.ensemble;
    manifest["lags"] = lags;
    manifest["conditioning_states"] = states.size();
    json files = json::array();

    for (std::size_t i = 0; i < states.size(); ++i) {
        sc.seed = sif::rng::stream_key(cfg.at("seed").get<std::uint64_t>(), 0xf0, i);
        const auto ensembles =
            sif::rollout_ensemble(drift, diffusion, sc, states[i], lags, exec_mode(g));
        for (int j = 0; j < lags; ++j) {
            char name[64];
            std::snprintf(name, sizeof name, "ensemble_x0%03zu_lag%02d.bin", i, j + 1);
            const std::int64_t shape[2] = {ensembles[j].members, dim};
            sif::io::write_array((out_dir / name).string(), ensembles[j].samples, shape);
            files.push_back(name);
            if (csv && dim <= 3) {
                std::vector<std::vector<double>> rows;
                for (std::int64_t m = 0; m < ensembles[j].members; ++m) {
                    std::vector<double> row(dim);
                    for (int c = 0; c < dim; ++c) row[c] = ensembles[j].samples[m * dim + c];
                    rows.push_back(row);
                }
                std::string header = "x0";
                for (int c = 1; c < dim; ++c) header += ",x" + std::to_string(c);
                char cname[64];
                std::snprintf(cname, sizeof cname, "ensemble_x0%03zu_lag%02d.csv", i, j + 1);
                write_csv(out_dir / cname, header, rows);
            }
        }
    }
    manifest["files"] = files;
    sif::io::write_text_file((out_dir / "forecast_manifest.json").string(),
                             manifest.dump(2) + "\n");
    emit_resolved_config(cfg, out_dir);
    std::printf("forecast: %zu conditioning states x %d lags -> %s\n", states.size(), lags,
                out_dir.string().c_str());
    return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const GlobalOptions& g, const std::string& ensemble_file,
             const std::string& reference_file) {
    const json cfg = load_config(g);
    const fs::path out_dir = fs::path(cfg.at("output_dir").get<std::string>()) / "eval";
    const sif::io::Array ens = sif::io::read_array(ensemble_file);
    const sif::io::Array ref = sif::io::read_array(reference_file);
    if (ens.shape.size() != 2 || ref.shape.size() != 2)
        throw std::invalid_argument("eval: inputs must be [n,d] arrays");
    if (ens.shape[1] != ref.shape[1])
        throw std::invalid_argument("eval: ensemble/reference dimension mismatch");
    const int dim = static_cast<int>(ens.shape[1]);
    const std::int64_t m = ens.shape[0], r = ref.shape[0];
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    const sif::Exec exec = exec_mode(g);
    fs::create_directories(out_dir);

    json report;
    report["ensemble"] = ensemble_file;
    report["reference"] = reference_file;
    report["members"] = m;
    report["reference_count"] = r;
    report["dim"] = dim;

    const auto moments = sif::conditional_moment_errors(ens.data, m, ref.data, r, dim);
    report["err_mean"] = moments.err_mean;
    report["err_std"] = moments.err_std;
    report["mean_reference_near_zero"] = moments.mean_reference_near_zero;

    auto kl_entry = [&](const std::string& label, std::span<const double> a,
                        std::span<const double> b) {
        const auto res = sif::kde_kl(a, b, 512, 100, seed, exec);
        json e;
        e["kl"] = res.kl;
        e["bootstrap_std"] = res.bootstrap_std;
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < res.grid.size(); ++i)
            rows.push_back({res.grid[i], res.density_p[i], res.density_q[i]});
        write_csv(out_dir / ("kde_" + label + ".csv"), "grid,ensemble,reference", rows);
        return e;
    };

    auto column = [&](const sif::io::Array& arr, std::int64_t n, int c) {
        std::vector<double> v(n);
        for (std::int64_t k = 0; k < n; ++k) v[k] = arr.data[k * dim + c];
        return v;
    };

    json kls;
    const int side = static_cast<int>(std::lround(std::sqrt(double(dim))));
    if (dim <= 3) {
        for (int c = 0; c < dim; ++c)
            kls["coordinate_" + std::to_string(c)] =
                kl_entry("coord" + std::to_string(c), column(ens, m, c), column(ref, r, c));
    } else if (side * side == dim) {
        // square fields: 1-D summaries (total enstrophy = squared 2-norm of
        // the vorticity snapshot; total energy via the inverse Laplacian)
        auto summaries = [&](const sif::io::Array& arr, std::int64_t n) {
            std::vector<double> enstrophy(n), energy(n);
            for (std::int64_t k = 0; k < n; ++k) {
                const std::span<const double> field(arr.data.data() + k * dim,
                                                    static_cast<std::size_t>(dim));
                double sq = 0.0;
                for (double v : field) sq += v * v;
                enstrophy[k] = sq;
                const auto spectrum = sif::enstrophy_spectrum(field, side);
                double en = 0.0;
                for (std::size_t s = 1; s < spectrum.size(); ++s)
                    en += spectrum[s] / (static_cast<double>(s) * s);
                energy[k] = en;
            }
            return std::pair{enstrophy, energy};
        };
        const auto [ens_enst, ens_energy] = summaries(ens, m);
        const auto [ref_enst, ref_energy] = summaries(ref, r);
        kls["total_enstrophy"] = kl_entry("total_enstrophy", ens_enst, ref_enst);
        kls["total_energy"] = kl_entry("total_energy", ens_energy, ref_energy);

        // mean enstrophy spectra for both sets
        std::vector<std::vector<double>> rows;
        std::vector<double> acc_e, acc_r;
        for (std::int64_t k = 0; k < m; ++k) {
            const auto sp = sif::enstrophy_spectrum(
                std::span<const double>(ens.data.data() + k * dim, dim), side);
            acc_e.resize(sp.size(), 0.0);
            for (std::size_t s = 0; s < sp.size(); ++s) acc_e[s] += sp[s] / m;
        }
        for (std::int64_t k = 0; k < r; ++k) {
            const auto sp = sif::enstrophy_spectrum(
                std::span<const double>(ref.data.data() + k * dim, dim), side);
            acc_r.resize(sp.size(), 0.0);
            for (std::size_t s = 0; s < sp.size(); ++s) acc_r[s] += sp[s] / r;
        }
        for (std::size_t s = 0; s < acc_e.size(); ++s)
            rows.push_back({static_cast<double>(s), acc_e[s], acc_r[s]});
        write_csv(out_dir / "enstrophy_spectrum.csv", "k,ensemble,reference", rows);
    } else {
        // generic high-dimensional data: vector-norm summary
        auto norms = [&](const sif::io::Array& arr, std::int64_t n) {
            std::vector<double> v(n);
            for (std::int64_t k = 0; k < n; ++k) {
                double sq = 0.0;
                for (int c = 0; c < dim; ++c) sq += arr.data[k * dim + c] * arr.data[k * dim + c];
                v[k] = std::sqrt(sq);
            }
            return v;
        };
        kls["state_norm"] = kl_entry("state_norm", norms(ens, m), norms(ref, r));
    }
    report["kde_kl"] = kls;

    // two-sample test on subsampled sets (cost grows quadratically)
    const std::int64_t cap = 800;
    const std::int64_t na = std::min(m, cap), nb = std::min(r, cap);
    std::vector<double> sub_a(na * dim), sub_b(nb * dim);
    for (std::int64_t k = 0; k < na; ++k)
        std::copy_n(ens.data.begin() + (k * (m / na)) * dim, dim, sub_a.begin() + k * dim);
    for (std::int64_t k = 0; k < nb; ++k)
        std::copy_n(ref.data.begin() + (k * (r / nb)) * dim, dim, sub_b.begin() + k * dim);
    report["energy_distance_p"] =
        sif::energy_distance_test(sub_a, na, sub_b, nb, dim, 199, seed, exec);

    sif::io::write_text_file((out_dir / "report.json").string(), report.dump(2) + "\n");
    emit_resolved_config(cfg, out_dir);
    std::printf("eval: err_mean=%.4g err_std=%.4g energy_p=%.3f -> %s\n", moments.err_mean,
                moments.err_std, report["energy_distance_p"].get<double>(),
                out_dir.string().c_str());
    return 0;
}

// ----------------------------------------------------------------- spectra

int cmd_spectra(const GlobalOptions& g, const std::string& input) {
    const json cfg = load_config(g);
    const fs::path out_dir = fs::path(cfg.at("output_dir").get<std::string>()) / "spectra";
    const sif::io::Array arr = sif::io::read_array(input);
    std::int64_t count = 0;
    int dim = 0;
    if (arr.shape.size() == 1) {
        count = 1;
        dim = static_cast<int>(arr.shape[0]);
    } else if (arr.shape.size() == 2) {
        count = arr.shape[0];
        dim = static_cast<int>(arr.shape[1]);
    } else {
        throw std::invalid_argument("spectra: input must be [d] or [n,d]");
    }
    const int side = static_cast<int>(std::lround(std::sqrt(double(dim))));
    if (side * side != dim)
        throw std::invalid_argument("spectra: fields must be square (got dim " +
                                    std::to_string(dim) + ")");
    std::vector<double> mean_spectrum;
    for (std::int64_t k = 0; k < count; ++k) {
        const auto sp = sif::enstrophy_spectrum(
            std::span<const double>(arr.data.data() + k * dim, dim), side);
        mean_spectrum.resize(sp.size(), 0.0);
        for (std::size_t s = 0; s < sp.size(); ++s) mean_spectrum[s] += sp[s] / count;
    }
    fs::create_directories(out_dir);
    std::vector<std::vector<double>> rows;
    for (std::size_t s = 0; s < mean_spectrum.size(); ++s)
        rows.push_back({static_cast<double>(s), mean_spectrum[s]});
    write_csv(out_dir / "enstrophy_spectrum.csv", "k,enstrophy", rows);
    emit_resolved_config(cfg, out_dir);
    std::printf("spectra: %lld field(s) of %dx%d -> %s\n", static_cast<long long>(count),
                side, side, out_dir.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic forecasting with interpolant SDEs"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON run configuration");
    app.add_option("--out", g.output_dir, "override output_dir");
    app.add_option("--seed", g.seed, "override seed");
    app.add_option("--threads", g.threads, "cap worker threads");
    app.add_flag("--serial", g.serial, "disable parallel kernels");
    app.add_option("--set", g.overrides, "override a config key: a.b.c=value")
        ->take_all();

    auto* gen = app.add_subcommand("gen-data", "simulate a dataset of transition pairs");

    bool resume = false;
    int epoch_limit = 0;
    auto* train_cmd = app.add_subcommand("train", "fit the drift network");
    train_cmd->add_flag("--resume", resume, "continue from the saved checkpoint");
    train_cmd->add_option("--max-epochs", epoch_limit,
                          "process at most this many epochs now (schedule unchanged)");

    std::string checkpoint, x0_source, ens_file, ref_file, spectra_input;
    int lags = 0;
    bool csv = false;
    auto* forecast_cmd = app.add_subcommand("forecast", "sample forecast ensembles");
    forecast_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    forecast_cmd->add_option("--x0", x0_source,
                             "conditioning state: array file or dataset:<dir>:<index>")
        ->required();
    forecast_cmd->add_option("--lags", lags, "autoregressive lags (default from config)");
    forecast_cmd->add_flag("--csv", csv, "also write CSV for dim <= 3");

    auto* eval_cmd = app.add_subcommand("eval", "compare an ensemble against a reference");
    eval_cmd->add_option("--ensemble", ens_file, "ensemble array file")->required();
    eval_cmd->add_option("--reference", ref_file, "reference array file")->required();

    auto* spectra_cmd = app.add_subcommand("spectra", "mean enstrophy spectrum of fields");
    spectra_cmd->add_option("--input", spectra_input, "array file of flattened fields")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (g.threads > 0) sif::set_max_threads(g.threads);
        if (gen->parsed()) return cmd_gen_data(g);
        if (train_cmd->parsed()) return cmd_train(g, resume, epoch_limit);
        if (forecast_cmd->parsed()) return cmd_forecast(g, checkpoint, x0_source, lags, csv);
        if (eval_cmd->parsed()) return cmd_eval(g, ens_file, ref_file);
        if (spectra_cmd->parsed()) return cmd_spectra(g, spectra_input);
    } catch (const sif::NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
