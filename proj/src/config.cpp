#include "prnn/config.hpp"

#include "prnn/csv.hpp"
#include "prnn/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace prnn {

namespace pt = boost::property_tree;

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double parse_angle(const std::string& text) {
    std::string s = text;
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        std::string coef = s.substr(0, s.size() - 2);
        if (!coef.empty() && coef.back() == '*') coef.pop_back();
        double k = 1.0;
        if (coef == "-") k = -1.0;
        else if (!coef.empty() && coef != "+") k = csv::parse_double(coef);
        return k * std::numbers::pi;
    }
    return csv::parse_double(s);
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"mg", {"a", "b", "p", "tau", "dt", "x0", "burn_in", "downsample"}},
        {"data", {"train_len", "discard", "test_len", "input_offset", "input_scale"}},
        {"topology", {"kind", "grid_side", "kernel_radius", "heterogeneity", "normalize", "matrix_file"}},
        {"optics", {"wavelength", "slm_pitch", "oversample", "grid_samples", "doe", "doe_depth", "order_spacing",
                    "footprint_shift", "aperture", "propagation_distances"}},
        {"network", {"beta", "gamma", "mu", "theta0", "delta_theta", "injection", "calibrate_alpha", "alpha",
                     "delta", "quantize_8bit", "noise_std"}},
        {"learner", {"max_iterations", "strict", "checkpoint_every"}},
        {"sweep", {"mu", "beta", "gamma", "seeds"}},
        {"seeds", {"base", "topology", "phases", "injection", "learner", "noise"}},
        {"output", {"dir", "plot", "workers"}},
    };
    return keys;
}

std::size_t to_count(const std::string& v) {
    const auto x = csv::parse_int(v);
    if (x < 0) throw InvalidArgument("expected a nonnegative integer, got '" + v + "'");
    return static_cast<std::size_t>(x);
}

std::uint64_t to_seed(const std::string& v) {
    const auto x = csv::parse_int(v);
    if (x < 0) throw InvalidArgument("seeds must be nonnegative, got '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidArgument("expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v) {
    std::vector<double> out;
    for (auto part : csv::split(v))
        if (!part.empty()) out.push_back(parse_angle(std::string(part)));
    return out;
}

std::string list_str(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv::num(v[i]);
    return s;
}

std::string b(bool v) { return v ? "true" : "false"; }

} // namespace

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        auto it = known_keys().find(section);
        if (it == known_keys().end()) throw InvalidArgument("config: unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            if (!it->second.count(key)) throw InvalidArgument("config: unknown key " + section + "." + key);
            const std::string v = node.get_value<std::string>();
            auto& mg = cfg.mg;
            auto& d = cfg.data;
            auto& t = cfg.topology;
            auto& o = cfg.topology.optics;
            auto& nw = cfg.network;
            if (section == "mg") {
                if (key == "a") mg.a = csv::parse_double(v);
                else if (key == "b") mg.b = csv::parse_double(v);
                else if (key == "p") mg.p = csv::parse_double(v);
                else if (key == "tau") mg.tau = csv::parse_double(v);
                else if (key == "dt") mg.dt = csv::parse_double(v);
                else if (key == "x0") mg.x0 = csv::parse_double(v);
                else if (key == "burn_in") d.burn_in = to_count(v);
                else if (key == "downsample") d.downsample = to_count(v);
            } else if (section == "data") {
                if (key == "train_len") d.train_len = to_count(v);
                else if (key == "discard") d.discard = to_count(v);
                else if (key == "test_len") d.test_len = to_count(v);
                else if (key == "input_offset") d.input_offset = csv::parse_double(v);
                else if (key == "input_scale") d.input_scale = csv::parse_double(v);
            } else if (section == "topology") {
                if (key == "kind") {
                    if (v == "synthetic") t.kind = TopologyKind::Synthetic;
                    else if (v == "optical") t.kind = TopologyKind::Optical;
                    else if (v == "file") t.kind = TopologyKind::File;
                    else throw InvalidArgument("config: topology.kind must be synthetic, optical or file");
                } else if (key == "grid_side") t.grid_side = to_count(v);
                else if (key == "kernel_radius") t.kernel_radius = to_count(v);
                else if (key == "heterogeneity") t.heterogeneity = csv::parse_double(v);
                else if (key == "normalize") {
                    if (v == "max-row-sum") t.normalize = NormalizeMode::MaxRowSum;
                    else if (v == "spectral") t.normalize = NormalizeMode::Spectral;
                    else if (v == "none") t.normalize.reset();
                    else throw InvalidArgument("config: topology.normalize must be max-row-sum, spectral or none");
                } else if (key == "matrix_file") t.matrix_file = v;
            } else if (section == "optics") {
                if (key == "wavelength") o.wavelength = csv::parse_double(v);
                else if (key == "slm_pitch") o.slm_pitch = csv::parse_double(v);
                else if (key == "oversample") o.oversample = to_count(v);
                else if (key == "grid_samples") o.grid_samples = to_count(v);
                else if (key == "doe") {
                    if (v == "flat") o.doe.kind = DoeGrating::Kind::Flat;
                    else if (v == "triplicator") o.doe.kind = DoeGrating::Kind::Triplicator;
                    else if (v == "sinusoidal") o.doe.kind = DoeGrating::Kind::Sinusoidal;
                    else throw InvalidArgument("config: optics.doe must be flat, triplicator or sinusoidal");
                } else if (key == "doe_depth") o.doe.depth = parse_angle(v);
                else if (key == "order_spacing") o.order_spacing = csv::parse_double(v);
                else if (key == "footprint_shift") o.footprint_shift = csv::parse_double(v);
                else if (key == "aperture") o.aperture = csv::parse_double(v);
                else if (key == "propagation_distances") o.propagation_distances = to_list(v);
            } else if (section == "network") {
                if (key == "beta") nw.beta = csv::parse_double(v);
                else if (key == "gamma") nw.gamma = csv::parse_double(v);
                else if (key == "mu") nw.mu = csv::parse_double(v);
                else if (key == "theta0") nw.theta0 = parse_angle(v);
                else if (key == "delta_theta") nw.delta_theta = parse_angle(v);
                else if (key == "injection") {
                    if (v == "uniform") nw.injection = InjectionMask::Uniform;
                    else if (v == "binary") nw.injection = InjectionMask::Binary;
                    else if (v == "ones") nw.injection = InjectionMask::Ones;
                    else throw InvalidArgument("config: network.injection must be uniform, binary or ones");
                } else if (key == "calibrate_alpha") nw.calibrate_alpha = to_bool(v);
                else if (key == "alpha") nw.alpha = csv::parse_double(v);
                else if (key == "delta") nw.delta = csv::parse_double(v);
                else if (key == "quantize_8bit") nw.quantize_8bit = to_bool(v);
                else if (key == "noise_std") nw.noise_std = csv::parse_double(v);
            } else if (section == "learner") {
                if (key == "max_iterations") cfg.learner.max_iterations = to_count(v);
                else if (key == "strict") cfg.learner.strict = to_bool(v);
                else if (key == "checkpoint_every") cfg.learner.checkpoint_every = to_count(v);
            } else if (section == "sweep") {
                if (key == "seeds") {
                    cfg.sweep.seeds.clear();
                    for (auto part : csv::split(v))
                        if (!part.empty()) cfg.sweep.seeds.push_back(to_seed(std::string(part)));
                } else if (key == "mu") cfg.sweep.mu = to_list(v);
                else if (key == "beta") cfg.sweep.beta = to_list(v);
                else if (key == "gamma") cfg.sweep.gamma = to_list(v);
            } else if (section == "seeds") {
                const auto s = to_seed(v);
                if (key == "base") cfg.seeds.base = s;
                else if (key == "topology") cfg.seeds.topology = s;
                else if (key == "phases") cfg.seeds.phases = s;
                else if (key == "injection") cfg.seeds.injection = s;
                else if (key == "learner") cfg.seeds.learner = s;
                else if (key == "noise") cfg.seeds.noise = s;
            } else if (section == "output") {
                if (key == "dir") cfg.output_dir = v;
                else if (key == "plot") cfg.plot = to_bool(v);
                else if (key == "workers") cfg.workers = to_count(v);
            }
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("config: cannot open '" + path + "'");
    return parse_config(in);
}

void ExperimentConfig::validate() const {
    mg.validate();
    if (data.downsample < 1) throw InvalidArgument("config: mg.downsample must be >= 1");
    if (data.train_len < 1) throw InvalidArgument("config: data.train_len must be >= 1");
    if (data.test_len < 1) throw InvalidArgument("config: data.test_len must be >= 1");
    if (!(data.input_scale > 0.0)) throw InvalidArgument("config: data.input_scale must be > 0");
    if (topology.grid_side < 1) throw InvalidArgument("config: topology.grid_side must be >= 1");
    if (!(topology.heterogeneity >= 0.0 && topology.heterogeneity <= 1.0))
        throw InvalidArgument("config: topology.heterogeneity must be in [0, 1]");
    if (topology.kind == TopologyKind::Optical) topology.optics.validate();
    if (topology.kind == TopologyKind::File && topology.matrix_file.empty())
        throw InvalidArgument("config: topology.matrix_file required for kind=file");
    if (!(network.beta >= 0.0) || !(network.gamma >= 0.0) || !(network.alpha >= 0.0))
        throw InvalidArgument("config: beta, gamma, alpha must be >= 0");
    if (!(network.mu >= 0.0 && network.mu <= 1.0)) throw InvalidArgument("config: network.mu must be in [0, 1]");
    if (!(network.delta > 0.0)) throw InvalidArgument("config: network.delta must be > 0");
    if (!(network.noise_std >= 0.0)) throw InvalidArgument("config: network.noise_std must be >= 0");
    if (learner.max_iterations < 1) throw InvalidArgument("config: learner.max_iterations must be >= 1");
    if (workers < 1) throw InvalidArgument("config: output.workers must be >= 1");
    for (double m : sweep.mu)
        if (!(m >= 0.0 && m <= 1.0)) throw InvalidArgument("config: sweep.mu entries must be in [0, 1]");
    for (double v : sweep.beta)
        if (!(v >= 0.0)) throw InvalidArgument("config: sweep.beta entries must be >= 0");
    for (double v : sweep.gamma)
        if (!(v >= 0.0)) throw InvalidArgument("config: sweep.gamma entries must be >= 0");
}

ResolvedSeeds ExperimentConfig::resolve_seeds() const {
    const std::uint64_t b = seeds.base;
    return {seeds.topology.value_or(mix_seed(b ^ 0x746f706f)), seeds.phases.value_or(mix_seed(b ^ 0x70686173)),
            seeds.injection.value_or(mix_seed(b ^ 0x696e6a65)), seeds.learner.value_or(mix_seed(b ^ 0x6c65726e)),
            seeds.noise.value_or(mix_seed(b ^ 0x6e6f6973))};
}

ExperimentConfig ExperimentConfig::with_seed(std::uint64_t seed) const {
    ExperimentConfig c = *this;
    c.seeds = SeedConfig{};
    c.seeds.base = seed;
    return c;
}

std::string ExperimentConfig::canonical() const {
    const auto s = resolve_seeds();
    const auto& o = topology.optics;
    std::vector<std::string> lines{
        "mg.a=" + csv::num(mg.a), "mg.b=" + csv::num(mg.b), "mg.p=" + csv::num(mg.p),
        "mg.tau=" + csv::num(mg.tau), "mg.dt=" + csv::num(mg.dt), "mg.x0=" + csv::num(mg.x0),
        "mg.burn_in=" + std::to_string(data.burn_in), "mg.downsample=" + std::to_string(data.downsample),
        "data.train_len=" + std::to_string(data.train_len), "data.discard=" + std::to_string(data.discard),
        "data.test_len=" + std::to_string(data.test_len), "data.input_offset=" + csv::num(data.input_offset),
        "data.input_scale=" + csv::num(data.input_scale),
        "topology.kind=" + std::string(topology.kind == TopologyKind::Synthetic ? "synthetic"
                                       : topology.kind == TopologyKind::Optical ? "optical"
                                                                                : "file"),
        "topology.grid_side=" + std::to_string(topology.grid_side),
        "topology.kernel_radius=" + std::to_string(topology.kernel_radius),
        "topology.heterogeneity=" + csv::num(topology.heterogeneity),
        "topology.normalize=" + std::string(!topology.normalize ? "none"
                                            : *topology.normalize == NormalizeMode::MaxRowSum ? "max-row-sum"
                                                                                               : "spectral"),
        "topology.matrix_file=" + topology.matrix_file,
        "optics.wavelength=" + csv::num(o.wavelength), "optics.slm_pitch=" + csv::num(o.slm_pitch),
        "optics.oversample=" + std::to_string(o.oversample), "optics.grid_samples=" + std::to_string(o.grid_samples),
        "optics.doe=" + std::to_string(static_cast<int>(o.doe.kind)), "optics.doe_depth=" + csv::num(o.doe.depth),
        "optics.order_spacing=" + csv::num(o.order_spacing), "optics.footprint_shift=" + csv::num(o.footprint_shift),
        "optics.aperture=" + csv::num(o.aperture), "optics.propagation_distances=" + list_str(o.propagation_distances),
        "network.beta=" + csv::num(network.beta), "network.gamma=" + csv::num(network.gamma),
        "network.mu=" + csv::num(network.mu), "network.theta0=" + csv::num(network.theta0),
        "network.delta_theta=" + csv::num(network.delta_theta),
        "network.injection=" + std::to_string(static_cast<int>(network.injection)),
        "network.calibrate_alpha=" + b(network.calibrate_alpha), "network.alpha=" + csv::num(network.alpha),
        "network.delta=" + csv::num(network.delta), "network.quantize_8bit=" + b(network.quantize_8bit),
        "network.noise_std=" + csv::num(network.noise_std),
        "learner.max_iterations=" + std::to_string(learner.max_iterations), "learner.strict=" + b(learner.strict),
        "learner.checkpoint_every=" + std::to_string(learner.checkpoint_every),
        "seeds.topology=" + std::to_string(s.topology), "seeds.phases=" + std::to_string(s.phases),
        "seeds.injection=" + std::to_string(s.injection), "seeds.learner=" + std::to_string(s.learner),
        "seeds.noise=" + std::to_string(s.noise),
    };
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) out += l + '\n';
    return out;
}

std::string ExperimentConfig::hash() const {
    const std::string text = canonical();
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 8; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

} // namespace prnn
