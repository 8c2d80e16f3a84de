#include <catch_amalgamated.hpp>

#include "prnn/errors.hpp"
#include "prnn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

using namespace prnn;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("prnn_test_" + name);
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

// Small but complete run: 10 x 10 nodes, short windows.
ExperimentConfig small_config(const fs::path& out) {
    auto c = parse(R"(
[data]
train_len = 200
discard = 30
test_len = 300
[topology]
grid_side = 10
[learner]
max_iterations = 400
checkpoint_every = 100
[sweep]
mu = 0.25, 0.45
seeds = 1, 2
)");
    c.output_dir = out.string();
    return c;
}

std::size_t count_lines(const std::string& s, bool skip_comments = true) {
    std::istringstream in(s);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!(skip_comments && !line.empty() && line[0] == '#')) ++n;
    return n;
}

} // namespace

TEST_CASE("angles and seeds", "[config]") {
    CHECK(parse_angle("1.5") == 1.5);
    CHECK(parse_angle("0.17pi") == Approx(0.17 * std::numbers::pi));
    CHECK(parse_angle("-pi") == Approx(-std::numbers::pi));
    CHECK(parse_angle("pi") == Approx(std::numbers::pi));
    CHECK_THROWS_AS(parse_angle("abc"), InvalidArgument);

    CHECK(mix_seed(1) == mix_seed(1));
    CHECK(mix_seed(1) != mix_seed(2));
}

TEST_CASE("defaults follow the reference protocol", "[config]") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.mg.a == 0.2);
    CHECK(c.mg.tau == 17.0);
    CHECK(c.mg.dt == 0.1);
    CHECK(c.data.train_len == 500);
    CHECK(c.data.discard == 30);
    CHECK(c.data.test_len == 4500);
    CHECK(c.topology.grid_side == 30);
    CHECK(c.topology.kernel_radius == 1);
    CHECK(c.network.beta == 0.8);
    CHECK(c.network.gamma == 0.4);
    CHECK(c.network.mu == 0.45);
    CHECK(c.network.theta0 == Approx(0.17 * std::numbers::pi));
    CHECK(c.learner.max_iterations == 5000);
    CHECK(c.learner.checkpoint_every == 250);
    CHECK(c.sweep.mu == std::vector<double>{0.25, 0.35, 0.45, 0.5});
}

TEST_CASE("config file parsing", "[config]") {
    auto c = parse(R"(
# comment
[mg]
tau = 20
downsample = 3
[topology]
kind = optical
normalize = spectral
[optics]
doe = triplicator
propagation_distances = 1e-6, 2e-6
[network]
theta0 = 0.2pi
injection = binary
calibrate_alpha = true
[sweep]
mu = 0.1, 0.2
seeds = 4, 5, 6
[seeds]
base = 9
learner = 77
[output]
dir = results
workers = 3
)");
    CHECK(c.mg.tau == 20.0);
    CHECK(c.data.downsample == 3);
    CHECK(c.topology.kind == TopologyKind::Optical);
    CHECK(c.topology.normalize == NormalizeMode::Spectral);
    CHECK(c.topology.optics.doe.kind == DoeGrating::Kind::Triplicator);
    CHECK(c.topology.optics.propagation_distances == std::vector<double>{1e-6, 2e-6});
    CHECK(c.network.theta0 == Approx(0.2 * std::numbers::pi));
    CHECK(c.network.injection == InjectionMask::Binary);
    CHECK(c.network.calibrate_alpha);
    CHECK(c.sweep.mu == std::vector<double>{0.1, 0.2});
    CHECK(c.sweep.seeds == std::vector<std::uint64_t>{4, 5, 6});
    CHECK(c.seeds.base == 9);
    CHECK(c.output_dir == "results");
    CHECK(c.workers == 3);

    auto s = c.resolve_seeds();
    CHECK(s.learner == 77);
    CHECK(s.phases != s.injection);
    CHECK(s.topology != s.phases);

    auto w = c.with_seed(9);
    CHECK(w.resolve_seeds().learner != 77);
    CHECK(parse("[topology]\nnormalize = none\n").topology.normalize == std::nullopt);
}

TEST_CASE("config rejects bad input", "[config]") {
    CHECK_THROWS_AS(parse("[mg]\nbogus = 1\n"), InvalidArgument);
    CHECK_THROWS_AS(parse("[nowhere]\na = 1\n"), InvalidArgument);
    CHECK_THROWS_AS(parse("[mg]\ntau = abc\n"), InvalidArgument);
    CHECK_THROWS_AS(parse("[topology]\nkind = hologram\n"), InvalidArgument);
    CHECK_THROWS_AS(parse("[data]\ntrain_len = -3\n"), InvalidArgument);
    CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), InvalidArgument);

    auto bad_validate = [](const std::string& text) { return parse(text).validate(); };
    CHECK_THROWS_AS(bad_validate("[learner]\nmax_iterations = 0\n"), InvalidArgument);
    CHECK_THROWS_AS(bad_validate("[network]\nmu = 1.5\n"), InvalidArgument);
    CHECK_THROWS_AS(bad_validate("[network]\nbeta = -1\n"), InvalidArgument);
    CHECK_THROWS_AS(bad_validate("[mg]\ntau = 17.05\n"), InvalidArgument);
    CHECK_THROWS_AS(bad_validate("[topology]\nkind = file\n"), InvalidArgument);
}

TEST_CASE("config hash tracks effective values", "[config]") {
    ExperimentConfig a, b;
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    b.network.mu = 0.25;
    CHECK(a.hash() != b.hash());
    // spelling a default explicitly does not change the hash
    CHECK(parse("[network]\nmu = 0.45\n").hash() == a.hash());
    CHECK(a.with_seed(3).hash() != a.hash());
    CHECK(a.canonical().find("network.mu=0.45") != std::string::npos);
}

TEST_CASE("drive series has the required length", "[experiment]") {
    ExperimentConfig c;
    c.mg.x0 = 1.2;
    auto s = build_drive_series(c);
    CHECK(s.size() == required_length(500, 30, 4500));
    CHECK(s.dt_effective == Approx(0.1));

    c.data.downsample = 3;
    auto d = build_drive_series(c);
    CHECK(d.size() == required_length(500, 30, 4500));
    CHECK(d.dt_effective == Approx(0.3));
    // downsampled series is every third sample of a longer run
    auto raw = integrate_mg(c.mg, 3 * (d.size() - 1) + 1, c.data.burn_in);
    CHECK(d.values == downsample(raw, 3).values);
}

TEST_CASE("cmd_mg writes a deterministic series", "[experiment][cli]") {
    auto dir = scratch("mg");
    ExperimentConfig c;
    c.output_dir = dir.string();
    auto files = cmd_mg(c);
    REQUIRE(files.size() == 1);
    auto first = slurp(files[0]);
    CHECK(first.find("# config_hash=" + c.hash()) != std::string::npos);
    CHECK(count_lines(first) == 1 + 5031);
    cmd_mg(c);
    CHECK(slurp(files[0]) == first);

    c.data.downsample = 3;
    cmd_mg(c);
    std::ifstream in(files[0]);
    auto series = read_series_csv(in);
    CHECK(series.dt_effective == Approx(0.3));
    CHECK(series.size() == 5031);
    fs::remove_all(dir);
}

TEST_CASE("cmd_doe, synthetic default", "[experiment][cli]") {
    auto dir = scratch("doe");
    ExperimentConfig c;
    c.output_dir = dir.string();
    auto files = cmd_doe(c);
    REQUIRE(files.size() == 2);
    CHECK(files[0].filename().string() == "coupling_" + c.hash() + ".txt");
    std::ifstream in(files[0]);
    auto m = read_matrix(in);
    CHECK(m.n_nodes() == 900);
    for (std::size_t r = 1; r < 29; ++r)
        for (std::size_t col = 1; col < 29; ++col) {
            std::size_t j = r * 30 + col, count = 0;
            for (std::size_t i = 0; i < 900; ++i) count += m.at(i, j) > 0.0;
            CHECK(count <= 9);
        }
    auto stats = slurp(files[1]);
    CHECK(stats.find("n_nodes,900\n") != std::string::npos);
    CHECK(stats.find("max_interior_support,9\n") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cmd_doe, flat optical DOE", "[experiment][cli]") {
    auto dir = scratch("doe_flat");
    auto c = parse("[topology]\nkind = optical\ngrid_side = 12\n[optics]\ndoe = flat\ngrid_samples = 256\n");
    c.output_dir = dir.string();
    auto files = cmd_doe(c);
    auto stats = slurp(files[1]);
    auto pos = stats.find("min_diagonal_dominance,");
    REQUIRE(pos != std::string::npos);
    double dom = std::stod(stats.substr(pos + 23));
    CHECK(dom > 10.0);
    fs::remove_all(dir);
}

TEST_CASE("topology from a matrix file", "[experiment]") {
    auto dir = scratch("file_topology");
    fs::create_directories(dir);
    auto path = dir / "m.txt";
    {
        std::ofstream out(path);
        write_matrix(out, synth_kernel_matrix(5, 1, 0.3, 4));
    }
    auto c = parse("[topology]\nkind = file\ngrid_side = 5\nmatrix_file = " + path.string() + "\n");
    auto m = build_topology(c);
    CHECK(m.n_nodes() == 25);
    fs::remove_all(dir);
}

TEST_CASE("end-to-end run is deterministic and consistent", "[experiment]") {
    auto dir = scratch("run");
    auto c = small_config(dir);
    auto a = run_experiment(c);
    auto b = run_experiment(c);
    CHECK(a.summary.epsilon_train == b.summary.epsilon_train);
    CHECK(a.summary.epsilon_test == b.summary.epsilon_test);
    CHECK(a.record.final_weights == b.record.final_weights);

    CHECK(a.summary.iterations == 400);
    CHECK(a.summary.epsilon_train >= 0.0);
    CHECK(a.summary.epsilon_test >= 0.0);
    CHECK(a.summary.epsilon_train == Approx(a.record.final_epsilon()).epsilon(1e-10));
    CHECK(a.summary.config_hash == c.hash());
    CHECK(a.summary.alpha == 2.5);

    REQUIRE(a.checkpoints.size() == 4);
    CHECK(a.checkpoints.back().k == 400);
    CHECK(a.checkpoints.back().epsilon_test == a.summary.epsilon_test);
    for (std::size_t k = 1; k < a.checkpoints.size(); ++k)
        CHECK(a.checkpoints[k].epsilon_train <= a.checkpoints[k - 1].epsilon_train);

    // predictions: 200 scored training rows, 300 test rows
    REQUIRE(a.predictions.size() == 500);
    std::size_t test_rows = 0;
    for (const auto& r : a.predictions) {
        test_rows += r.test;
        CHECK(r.abs_error == Approx(std::abs(r.y_target - r.y_out_normalized)).margin(1e-12));
    }
    CHECK(test_rows == 300);

    // training error recomputed from the emitted rows
    std::vector<double> diff;
    for (const auto& r : a.predictions)
        if (!r.test) diff.push_back(r.y_target - r.y_out_normalized);
    double m = 0.0;
    for (double d : diff) m += d;
    m /= static_cast<double>(diff.size());
    double ss = 0.0;
    for (double d : diff) ss += (d - m) * (d - m);
    CHECK(std::sqrt(ss / static_cast<double>(diff.size())) == Approx(a.summary.epsilon_train).epsilon(1e-9));

    auto other = run_experiment(c.with_seed(2));
    CHECK(other.record.final_weights != a.record.final_weights);
}

TEST_CASE("cmd_train artifacts", "[experiment][cli]") {
    auto dir = scratch("train");
    auto c = small_config(dir);
    c.plot = true;
    RunSummary s;
    auto files = cmd_train(c, &s);
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.filename().string());
    for (const std::string want : {"learning.csv", "prediction.csv", "checkpoints.csv", "summary.csv",
                                   "learning_curve.svg", "prediction.svg"})
        CHECK(std::find(names.begin(), names.end(), want) != names.end());
    CHECK(std::find(names.begin(), names.end(), "weights_" + c.hash() + ".txt") != names.end());

    auto weights = slurp(dir / ("weights_" + c.hash() + ".txt"));
    CHECK(weights.size() == 101);
    CHECK(weights.back() == '\n');
    CHECK(weights.find_first_not_of("01\n") == std::string::npos);

    auto pred = slurp(dir / "prediction.csv");
    CHECK(pred.find("n,u,y_target,y_out_raw,y_out_normalized,abs_error\n") != std::string::npos);
    CHECK(count_lines(pred) == 501);
    CHECK(count_lines(slurp(dir / "learning.csv")) == 401);

    // every artifact except the hash-named ones carries the hash inside
    for (const auto& f : files) {
        if (f.extension() == ".csv") CHECK(slurp(f).find(c.hash()) != std::string::npos);
    }

    // rerun: byte-identical artifacts
    std::map<std::string, std::string> before;
    for (const auto& f : files) before[f.string()] = slurp(f);
    cmd_train(c);
    for (const auto& f : files) CHECK(slurp(f) == before[f.string()]);
    fs::remove_all(dir);
}

TEST_CASE("sweep rows do not depend on worker count", "[experiment][cli]") {
    auto dir = scratch("sweep");
    auto c = small_config(dir);
    c.learner.max_iterations = 150;
    c.workers = 1;
    auto serial = run_sweep(c);
    c.workers = 3;
    auto parallel = run_sweep(c);
    REQUIRE(serial.size() == 4);
    REQUIRE(parallel.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(serial[k].mu == parallel[k].mu);
        CHECK(serial[k].seed == parallel[k].seed);
        CHECK(serial[k].epsilon_train == parallel[k].epsilon_train);
        CHECK(serial[k].epsilon_test == parallel[k].epsilon_test);
    }
    CHECK(serial[0].mu == 0.25);
    CHECK(serial[0].seed == 1);
    CHECK(serial[1].seed == 2);
    CHECK(serial[2].mu == 0.45);

    std::vector<SweepRow> rows;
    auto files = cmd_sweep(c, &rows);
    auto text = slurp(files[0]);
    CHECK(text.find("mu,beta,gamma,seed,epsilon_train,epsilon_test\n") != std::string::npos);
    CHECK(count_lines(text) == 5);
    fs::remove_all(dir);
}

TEST_CASE("singleton sweep equals a training run", "[experiment]") {
    auto c = small_config(scratch("single"));
    c.learner.max_iterations = 150;
    c.sweep.mu = {0.45};
    c.sweep.beta = {0.8};
    c.sweep.gamma = {0.4};
    c.sweep.seeds = {3};
    auto rows = run_sweep(c);
    REQUIRE(rows.size() == 1);
    auto run = run_experiment(c.with_seed(3));
    CHECK(rows[0].epsilon_train == run.summary.epsilon_train);
    CHECK(rows[0].epsilon_test == run.summary.epsilon_test);
}

TEST_CASE("noisy runs resample and stay reproducible", "[experiment]") {
    auto c = small_config(scratch("noise"));
    c.learner.max_iterations = 40;
    c.network.noise_std = 0.01;
    c.network.quantize_8bit = true;
    auto a = run_experiment(c);
    auto b = run_experiment(c);
    CHECK(a.summary.epsilon_train == b.summary.epsilon_train);
    CHECK(a.summary.epsilon_test == b.summary.epsilon_test);
}

TEST_CASE("calibrated gain is reported", "[experiment]") {
    auto c = small_config(scratch("calib"));
    c.learner.max_iterations = 10;
    c.network.calibrate_alpha = true;
    auto r = run_experiment(c);
    CHECK(r.summary.alpha > 0.0);
    CHECK(r.summary.alpha != 2.5);
}
