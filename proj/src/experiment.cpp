#include "prnn/experiment.hpp"

#include "prnn/csv.hpp"
#include "prnn/errors.hpp"
#include "prnn/svg.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace prnn {

namespace fs = std::filesystem;

TimeSeries build_drive_series(const ExperimentConfig& config) {
    const auto& d = config.data;
    const std::size_t needed = required_length(d.train_len, d.discard, d.test_len);
    const std::size_t raw = (needed - 1) * d.downsample + 1;
    return downsample(integrate_mg(config.mg, raw, d.burn_in), d.downsample);
}

CouplingMatrix build_topology(const ExperimentConfig& config) {
    const auto& t = config.topology;
    CouplingMatrix m;
    switch (t.kind) {
    case TopologyKind::Synthetic:
        m = synth_kernel_matrix(t.grid_side, t.kernel_radius, t.heterogeneity, config.resolve_seeds().topology);
        break;
    case TopologyKind::Optical: {
        OpticalSystemSpec spec = t.optics;
        spec.grid_side = t.grid_side;
        m = compute_doe_matrix(spec);
        break;
    }
    case TopologyKind::File: {
        std::ifstream in(t.matrix_file);
        if (!in) throw IoError("cannot open matrix file '" + t.matrix_file + "'");
        m = read_matrix(in);
        break;
    }
    }
    if (t.normalize) m = normalize_matrix(m, *t.normalize).matrix;
    return m;
}

RnnConfig build_network(const ExperimentConfig& config, std::shared_ptr<const CouplingMatrix> coupling,
                        const TimeSeries& probe) {
    const auto seeds = config.resolve_seeds();
    const auto& nw = config.network;
    const std::size_t n = coupling->n_nodes();
    RnnConfig rnn;
    rnn.beta = nw.beta;
    rnn.gamma = nw.gamma;
    rnn.alpha = nw.alpha;
    rnn.theta = init_phases(n, nw.mu, nw.theta0, nw.delta_theta, seeds.phases);
    rnn.w_inj = init_injection(n, nw.injection, seeds.injection);
    rnn.coupling = std::move(coupling);
    rnn.quantize_8bit = nw.quantize_8bit;
    rnn.noise_std = nw.noise_std;
    rnn.noise_seed = seeds.noise;
    if (nw.calibrate_alpha) rnn.alpha = calibrate_alpha(rnn, probe);
    return rnn;
}

namespace {

TimeSeries scale_input(const TimeSeries& u, const DataConfig& d) {
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (u[i] - d.input_offset) * d.input_scale;
    return TimeSeries(std::move(v), u.dt_effective);
}

struct Scorer {
    const Trajectory& train; // discard + train_len steps
    const Trajectory& test;
    const std::vector<double>& train_target; // normalized, scored window only
    const std::vector<double>& test_target;  // normalized
    std::size_t discard;
    double delta;

    struct Result {
        double eps_train = std::numeric_limits<double>::infinity();
        double eps_test = std::numeric_limits<double>::infinity();
        std::vector<double> y_train, y_test, yn_train, yn_test;
    };

    // Output transform is fitted on the scored training window and reused on test.
    Result score(const BooleanWeights& w) const {
        Result r;
        const TimeSeries yt = readout(train, w, delta);
        const TimeSeries ys = readout(test, w, delta);
        r.y_train.assign(yt.values.begin() + static_cast<std::ptrdiff_t>(discard), yt.values.end());
        r.y_test = ys.values;
        const double m = mean_of(r.y_train), s = pstd_of(r.y_train);
        if (!(s > 0.0)) return r;
        r.yn_train.resize(r.y_train.size());
        r.yn_test.resize(r.y_test.size());
        std::vector<double> d(r.y_train.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            r.yn_train[i] = -(r.y_train[i] - m) / s;
            d[i] = train_target[i] - r.yn_train[i];
        }
        r.eps_train = pstd_of(d);
        d.resize(r.y_test.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            r.yn_test[i] = -(r.y_test[i] - m) / s;
            d[i] = test_target[i] - r.yn_test[i];
        }
        r.eps_test = pstd_of(d);
        return r;
    }
};

} // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto seeds = config.resolve_seeds();
    const auto& d = config.data;

    const TimeSeries series = build_drive_series(config);
    const PredictionPairs pairs = make_prediction_pairs(series, d.train_len, d.discard, d.test_len);
    const TimeSeries train_in = scale_input(pairs.train_inputs, d);
    const TimeSeries all_in = scale_input(pairs.all_inputs(), d);

    auto coupling = std::make_shared<const CouplingMatrix>(build_topology(config));
    const RnnConfig rnn = build_network(config, coupling, train_in);

    const Trajectory traj = run(rnn, all_in, RnnState::zeros(rnn.n_nodes()));
    const std::size_t n_train = d.discard + d.train_len;
    const Trajectory train_traj = traj.slice(0, n_train);
    const Trajectory test_traj = traj.slice(n_train, d.test_len);

    // Target transform from the scored training window only.
    const TimeSeries scored_targets({pairs.train_targets.values.begin() + static_cast<std::ptrdiff_t>(d.discard),
                                     pairs.train_targets.values.end()},
                                    pairs.train_targets.dt_effective);
    const Standardized fitted = standardize(scored_targets);
    const TimeSeries train_target = apply_standardization(pairs.train_targets, fitted.mean, fitted.std);
    const TimeSeries test_target = apply_standardization(pairs.test_targets, fitted.mean, fitted.std);
    const std::vector<double> scored_norm(train_target.values.begin() + static_cast<std::ptrdiff_t>(d.discard),
                                          train_target.values.end());

    const Scorer scorer{train_traj, test_traj, scored_norm, test_target.values, d.discard, config.network.delta};

    LearnerConfig lc;
    lc.max_iterations = config.learner.max_iterations;
    lc.seed = seeds.learner;
    lc.discard = d.discard;
    lc.strict_improvement = config.learner.strict;
    lc.delta = config.network.delta;

    RunResult result;
    const std::size_t every = config.learner.checkpoint_every;
    IterationObserver observer;
    if (every > 0) {
        observer = [&](const IterationView& view) {
            if (view.row.k % every != 0) return;
            const auto s = scorer.score(view.weights);
            result.checkpoints.push_back({view.row.k, view.row.epsilon_accepted, s.eps_test});
        };
    }

    if (config.network.noise_std > 0.0) {
        // Noisy camera: every evaluation sees a fresh realization, as on hardware.
        auto sample = [&](std::size_t k) {
            RnnConfig noisy = rnn;
            noisy.noise_seed = mix_seed(seeds.noise + 1 + k);
            return run(noisy, train_in, RnnState::zeros(rnn.n_nodes()));
        };
        result.record = greedy_train_resampled(sample, train_target, lc, observer);
    } else {
        result.record = greedy_train(train_traj, train_target, lc, observer);
    }

    const auto final_score = scorer.score(result.record.final_weights);
    auto& sum = result.summary;
    sum.config_hash = config.hash();
    sum.seed = config.seeds.base;
    sum.epsilon_train = final_score.eps_train;
    sum.epsilon_test = final_score.eps_test;
    sum.iterations = result.record.rows.size();
    sum.alpha = rnn.alpha;

    if (!final_score.yn_train.empty()) {
        for (std::size_t i = 0; i < final_score.y_train.size(); ++i) {
            const std::size_t n = d.discard + i;
            result.predictions.push_back({n, pairs.train_inputs[n], scored_norm[i], final_score.y_train[i],
                                          final_score.yn_train[i], std::abs(scored_norm[i] - final_score.yn_train[i]),
                                          false});
        }
        for (std::size_t i = 0; i < final_score.y_test.size(); ++i) {
            result.predictions.push_back({n_train + i, pairs.test_inputs[i], test_target[i], final_score.y_test[i],
                                          final_score.yn_test[i], std::abs(test_target[i] - final_score.yn_test[i]),
                                          true});
        }
    }
    sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

fs::path prepare_dir(const ExperimentConfig& config) {
    fs::path dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

std::string hash_line(const ExperimentConfig& config) { return "config_hash=" + config.hash(); }

} // namespace

std::vector<fs::path> cmd_mg(const ExperimentConfig& config) {
    config.validate();
    const auto dir = prepare_dir(config);
    const TimeSeries series = build_drive_series(config);
    const auto path = dir / "mg.csv";
    auto out = open_out(path);
    write_series_csv(out, series,
                     {hash_line(config), "dt_effective=" + csv::num(series.dt_effective),
                      "a=" + csv::num(config.mg.a) + " b=" + csv::num(config.mg.b) + " p=" + csv::num(config.mg.p) +
                          " tau=" + csv::num(config.mg.tau) + " dt=" + csv::num(config.mg.dt) +
                          " x0=" + csv::num(config.mg.x0),
                      "burn_in=" + std::to_string(config.data.burn_in) +
                          " downsample=" + std::to_string(config.data.downsample),
                      "samples=" + std::to_string(series.size())});
    return {path};
}

std::vector<fs::path> cmd_doe(const ExperimentConfig& config) {
    config.validate();
    const auto dir = prepare_dir(config);
    const CouplingMatrix m = build_topology(config);
    const MatrixStats stats = matrix_stats(m);

    const auto matrix_path = dir / ("coupling_" + config.hash() + ".txt");
    {
        auto out = open_out(matrix_path);
        write_matrix(out, m);
    }
    const auto stats_path = dir / "doe_stats.csv";
    auto out = open_out(stats_path);
    out << "# " << hash_line(config) << '\n'
        << "key,value\n"
        << "n_nodes," << m.n_nodes() << '\n'
        << "kernel_radius," << m.kernel_radius() << '\n'
        << "nonzeros," << m.weights().nonZeros() << '\n'
        << "max_interior_support," << stats.max_interior_support << '\n'
        << "mean_offset_cv," << csv::num(stats.mean_offset_cv) << '\n'
        << "max_offset_cv," << csv::num(stats.max_offset_cv) << '\n'
        << "min_diagonal_dominance," << csv::num(stats.min_diagonal_dominance) << '\n';
    if (!out) throw IoError("failed writing DOE statistics");
    return {matrix_path, stats_path};
}

std::vector<fs::path> cmd_train(const ExperimentConfig& config, RunSummary* summary_out) {
    config.validate();
    const auto dir = prepare_dir(config);
    const RunResult result = run_experiment(config);
    const std::string hash = hash_line(config);
    std::vector<fs::path> written;

    {
        const auto path = dir / "learning.csv";
        auto out = open_out(path);
        write_learning_csv(out, result.record, {hash, "initial_epsilon=" + csv::num(result.record.initial_epsilon)});
        written.push_back(path);
    }
    {
        const auto path = dir / "prediction.csv";
        auto out = open_out(path);
        out << "# " << hash << '\n'
            << "# rows with n < " << config.data.discard + config.data.train_len << " are the scored training window\n"
            << "n,u,y_target,y_out_raw,y_out_normalized,abs_error\n";
        for (const auto& r : result.predictions)
            out << r.n << ',' << csv::num(r.u) << ',' << csv::num(r.y_target) << ',' << csv::num(r.y_out_raw) << ','
                << csv::num(r.y_out_normalized) << ',' << csv::num(r.abs_error) << '\n';
        if (!out) throw IoError("failed writing prediction CSV");
        written.push_back(path);
    }
    {
        const auto path = dir / "checkpoints.csv";
        auto out = open_out(path);
        out << "# " << hash << '\n' << "k,epsilon_train,epsilon_test\n";
        for (const auto& c : result.checkpoints)
            out << c.k << ',' << csv::num(c.epsilon_train) << ',' << csv::num(c.epsilon_test) << '\n';
        written.push_back(path);
    }
    {
        const auto path = dir / "summary.csv";
        auto out = open_out(path);
        const auto& s = result.summary;
        out << "config_hash,seed,epsilon_train,epsilon_test,iterations,alpha\n"
            << s.config_hash << ',' << s.seed << ',' << csv::num(s.epsilon_train) << ','
            << csv::num(s.epsilon_test) << ',' << s.iterations << ',' << csv::num(s.alpha) << '\n';
        written.push_back(path);
    }
    {
        const auto path = dir / ("weights_" + config.hash() + ".txt");
        auto out = open_out(path);
        out << result.record.final_weights.to_string() << '\n';
        written.push_back(path);
    }
    if (config.plot) {
        const std::string comment = hash;
        {
            svg::Series curve{"accepted error", "#1f77b4", {}, {}, false};
            for (const auto& r : result.record.rows) {
                curve.x.push_back(static_cast<double>(r.k));
                curve.y.push_back(r.epsilon_accepted);
            }
            svg::Series test{"test error", "#d62728", {}, {}, true};
            for (const auto& c : result.checkpoints) {
                test.x.push_back(static_cast<double>(c.k));
                test.y.push_back(c.epsilon_test);
            }
            const auto path = dir / "learning_curve.svg";
            auto out = open_out(path);
            svg::write_plot(out, {"Learning curve", "iteration k", "epsilon", true, comment}, {curve, test});
            written.push_back(path);
        }
        {
            svg::Series target{"target (normalized)", "#d62728", {}, {}, true};
            svg::Series output{"output (normalized, a.u.)", "#1f77b4", {}, {}, false};
            svg::Series error{"|error|", "#e6a800", {}, {}, false};
            std::size_t shown = 0;
            for (const auto& r : result.predictions) {
                if (!r.test || shown++ >= 400) continue;
                const auto n = static_cast<double>(r.n);
                target.x.push_back(n);
                target.y.push_back(r.y_target);
                output.x.push_back(n);
                output.y.push_back(r.y_out_normalized);
                error.x.push_back(n);
                error.y.push_back(r.abs_error);
            }
            const auto path = dir / "prediction.svg";
            auto out = open_out(path);
            svg::write_plot(out, {"Held-out prediction", "n", "signal (a.u.)", false, comment}, {output, target, error});
            written.push_back(path);
        }
    }
    if (summary_out) *summary_out = result.summary;
    return written;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
    config.validate();
    const auto& sw = config.sweep;
    if (sw.mu.empty() || sw.beta.empty() || sw.gamma.empty() || sw.seeds.empty())
        throw InvalidArgument("sweep: every grid (mu, beta, gamma, seeds) must be non-empty");

    std::vector<SweepRow> rows;
    for (double mu : sw.mu)
        for (double beta : sw.beta)
            for (double gamma : sw.gamma)
                for (auto seed : sw.seeds) rows.push_back({mu, beta, gamma, seed, 0.0, 0.0});

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= rows.size()) return;
            try {
                ExperimentConfig c = config.with_seed(rows[idx].seed);
                c.network.mu = rows[idx].mu;
                c.network.beta = rows[idx].beta;
                c.network.gamma = rows[idx].gamma;
                const auto s = run_experiment(c).summary;
                rows[idx].epsilon_train = s.epsilon_train;
                rows[idx].epsilon_test = s.epsilon_test;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::min(config.workers, rows.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

std::vector<fs::path> cmd_sweep(const ExperimentConfig& config, std::vector<SweepRow>* rows_out) {
    const auto rows = run_sweep(config);
    const auto dir = prepare_dir(config);
    const std::string hash = hash_line(config);

    const auto rows_path = dir / "sweep.csv";
    {
        auto out = open_out(rows_path);
        out << "# " << hash << '\n' << "mu,beta,gamma,seed,epsilon_train,epsilon_test\n";
        for (const auto& r : rows)
            out << csv::num(r.mu) << ',' << csv::num(r.beta) << ',' << csv::num(r.gamma) << ',' << r.seed << ','
                << csv::num(r.epsilon_train) << ',' << csv::num(r.epsilon_test) << '\n';
        if (!out) throw IoError("failed writing sweep CSV");
    }
    const auto summary_path = dir / "sweep_summary.csv";
    {
        auto out = open_out(summary_path);
        out << "# " << hash << '\n'
            << "mu,beta,gamma,n_seeds,mean_epsilon_train,min_epsilon_train,mean_epsilon_test,min_epsilon_test\n";
        const std::size_t per_point = config.sweep.seeds.size();
        for (std::size_t first = 0; first < rows.size(); first += per_point) {
            double mt = 0, mnt = std::numeric_limits<double>::infinity(), ms = 0,
                   mns = std::numeric_limits<double>::infinity();
            for (std::size_t i = first; i < first + per_point; ++i) {
                mt += rows[i].epsilon_train;
                ms += rows[i].epsilon_test;
                mnt = std::min(mnt, rows[i].epsilon_train);
                mns = std::min(mns, rows[i].epsilon_test);
            }
            const auto& r = rows[first];
            out << csv::num(r.mu) << ',' << csv::num(r.beta) << ',' << csv::num(r.gamma) << ',' << per_point << ','
                << csv::num(mt / static_cast<double>(per_point)) << ',' << csv::num(mnt) << ','
                << csv::num(ms / static_cast<double>(per_point)) << ',' << csv::num(mns) << '\n';
        }
        if (!out) throw IoError("failed writing sweep summary");
    }
    if (rows_out) *rows_out = rows;
    return {rows_path, summary_path};
}

} // namespace prnn
