#include "irx/runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

namespace irx {

using nlohmann::json;

SweepSpec RunConfig::make_sweep_spec() const {
    SweepSpec spec;
    spec.snr_points_db = sweep_snr_points;
    spec.blocks_per_point = sweep_blocks_per_point;
    spec.link = link;
    spec.policies = sweep_policies;
    spec.seed = seed;
    spec.workers = workers;
    spec.mix_formats = sweep_mix_formats;
    spec.inr_tracks_snr = sweep_inr_tracks_snr;
    return spec;
}

namespace {

void reject_unknown(const json& j, const char* where,
                    const std::set<std::string>& allowed) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError(std::string("config: unknown key '") + key +
                              "' in " + where);
    }
}

double get_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("config: ") + key + " must be a number");
    return j[key].get<double>();
}

std::size_t get_size(const json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_unsigned())
        throw ConfigError(std::string("config: ") + key + " must be a non-negative integer");
    return j[key].get<std::size_t>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw ConfigError(std::string("config: ") + key + " must be a boolean");
    return j[key].get<bool>();
}

std::string get_str(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ConfigError(std::string("config: ") + key + " must be a string");
    return j[key].get<std::string>();
}

ModFormat get_format(const json& j, const char* key, ModFormat fallback) {
    if (!j.contains(key)) return fallback;
    const auto f = parse_format(get_str(j, key, ""));
    if (!f) throw ConfigError(std::string("config: bad format name for ") + key);
    return *f;
}

std::vector<double> get_num_list(const json& j, const char* key,
                                 std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_array()) throw ConfigError(std::string("config: ") + key + " must be a list");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw ConfigError(std::string("config: ") + key + " entries must be numbers");
        out.push_back(v.get<double>());
    }
    if (out.empty()) throw ConfigError(std::string("config: ") + key + " must not be empty");
    return out;
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true); // allow comments
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: parse failure: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    RunConfig cfg;
    reject_unknown(j, "top level",
                   {"seed", "workers", "out_dir", "link", "detector", "train",
                    "sweep", "lut", "paths"});
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw ConfigError("config: seed must be a non-negative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    cfg.workers = get_size(j, "workers", cfg.workers);
    cfg.out_dir = get_str(j, "out_dir", cfg.out_dir);

    if (j.contains("link")) {
        const json& l = j["link"];
        reject_unknown(l, "link",
                       {"n_rx", "k1_layers", "k2_layers", "block_len", "snr_db",
                        "inr_db", "desired_format", "interference_format"});
        cfg.link.n_rx = get_size(l, "n_rx", cfg.link.n_rx);
        cfg.link.k1_layers = get_size(l, "k1_layers", cfg.link.k1_layers);
        cfg.link.k2_layers = get_size(l, "k2_layers", cfg.link.k2_layers);
        cfg.link.block_len = get_size(l, "block_len", cfg.link.block_len);
        cfg.link.snr_db = get_num(l, "snr_db", cfg.link.snr_db);
        cfg.link.inr_db = get_num(l, "inr_db", cfg.link.inr_db);
        cfg.link.desired_format = get_format(l, "desired_format", cfg.link.desired_format);
        cfg.link.interference_format =
            get_format(l, "interference_format", cfg.link.interference_format);
        if (cfg.link.n_rx == 0 || cfg.link.n_rx > 8 || cfg.link.k1_layers == 0 ||
            cfg.link.k1_layers > 8 || cfg.link.k2_layers == 0 ||
            cfg.link.k2_layers > 8 || cfg.link.block_len == 0)
            throw ConfigError("config: link dimensions out of range");
    }

    if (j.contains("detector")) {
        const json& d = j["detector"];
        reject_unknown(d, "detector", {"formats", "metric_variant", "k_tilde"});
        if (d.contains("formats")) {
            if (!d["formats"].is_array())
                throw ConfigError("config: detector.formats must be a list");
            std::vector<ModFormat> formats;
            for (const auto& v : d["formats"]) {
                if (!v.is_string()) throw ConfigError("config: format names must be strings");
                const auto f = parse_format(v.get<std::string>());
                if (!f) throw ConfigError("config: bad format name '" +
                                          v.get<std::string>() + "'");
                formats.push_back(*f);
            }
            if (formats.size() < 2)
                throw ConfigError("config: detector needs at least two formats");
            cfg.detector.formats = std::move(formats);
        }
        if (d.contains("metric_variant")) {
            const auto v = parse_metric_variant(get_str(d, "metric_variant", ""));
            if (!v) throw ConfigError("config: bad metric_variant");
            cfg.detector.variant = *v;
        }
        cfg.detector.k_tilde = get_size(d, "k_tilde", cfg.detector.k_tilde);
        if (cfg.detector.k_tilde == 0)
            throw ConfigError("config: detector.k_tilde must be positive");
    }

    if (j.contains("train")) {
        const json& t = j["train"];
        reject_unknown(t, "train",
                       {"learning_rate", "batch_size", "total_samples",
                        "snr_db_list", "init_seed", "mixture"});
        cfg.train.learning_rate = get_num(t, "learning_rate", cfg.train.learning_rate);
        cfg.train.batch_size = get_size(t, "batch_size", cfg.train.batch_size);
        cfg.train.total_samples = get_size(t, "total_samples", cfg.train.total_samples);
        cfg.train.init_seed = get_size(t, "init_seed", cfg.train.init_seed);
        cfg.train_snr_list = get_num_list(t, "snr_db_list", cfg.train_snr_list);
        cfg.train_mixture = get_bool(t, "mixture", cfg.train_mixture);
        if (!(cfg.train.learning_rate > 0.0) || cfg.train.batch_size == 0 ||
            cfg.train.total_samples < cfg.train.batch_size)
            throw ConfigError("config: bad training parameters");
    }

    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        reject_unknown(s, "sweep",
                       {"snr_points_db", "blocks_per_point", "policies",
                        "mix_formats", "inr_tracks_snr", "validation_samples"});
        cfg.sweep_snr_points = get_num_list(s, "snr_points_db", cfg.sweep_snr_points);
        cfg.sweep_blocks_per_point =
            get_size(s, "blocks_per_point", cfg.sweep_blocks_per_point);
        if (s.contains("policies")) {
            if (!s["policies"].is_array())
                throw ConfigError("config: sweep.policies must be a list");
            std::vector<Policy> policies;
            for (const auto& v : s["policies"]) {
                if (!v.is_string()) throw ConfigError("config: policy names must be strings");
                const auto p = parse_policy(v.get<std::string>());
                if (!p) throw ConfigError("config: unknown policy '" +
                                          v.get<std::string>() + "'");
                policies.push_back(*p);
            }
            if (policies.empty()) throw ConfigError("config: sweep.policies must not be empty");
            cfg.sweep_policies = std::move(policies);
        }
        cfg.sweep_mix_formats = get_bool(s, "mix_formats", cfg.sweep_mix_formats);
        cfg.sweep_inr_tracks_snr =
            get_bool(s, "inr_tracks_snr", cfg.sweep_inr_tracks_snr);
        cfg.validation_samples =
            get_size(s, "validation_samples", cfg.validation_samples);
        if (cfg.sweep_blocks_per_point == 0 || cfg.validation_samples == 0)
            throw ConfigError("config: sweep sizes must be positive");
    }

    if (j.contains("lut")) {
        const json& l = j["lut"];
        reject_unknown(l, "lut", {"samples_per_cell"});
        cfg.lut_samples_per_cell =
            get_size(l, "samples_per_cell", cfg.lut_samples_per_cell);
        if (cfg.lut_samples_per_cell == 0)
            throw ConfigError("config: lut.samples_per_cell must be positive");
    }

    if (j.contains("paths")) {
        const json& p = j["paths"];
        reject_unknown(p, "paths", {"lut", "mlp", "costs"});
        cfg.lut_path = get_str(p, "lut", cfg.lut_path);
        cfg.mlp_path = get_str(p, "mlp", cfg.mlp_path);
        cfg.costs_path = get_str(p, "costs", cfg.costs_path);
    }

    return cfg;
}

std::string canonical_config(const RunConfig& cfg) {
    json j;
    j["link"] = {{"n_rx", cfg.link.n_rx},
                 {"k1_layers", cfg.link.k1_layers},
                 {"k2_layers", cfg.link.k2_layers},
                 {"block_len", cfg.link.block_len},
                 {"snr_db", cfg.link.snr_db},
                 {"inr_db", cfg.link.inr_db},
                 {"desired_format", name(cfg.link.desired_format)},
                 {"interference_format", name(cfg.link.interference_format)}};
    json formats = json::array();
    for (ModFormat f : cfg.detector.formats) formats.push_back(name(f));
    j["detector"] = {{"formats", formats},
                     {"metric_variant", name(cfg.detector.variant)},
                     {"k_tilde", cfg.detector.k_tilde}};
    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"batch_size", cfg.train.batch_size},
                  {"total_samples", cfg.train.total_samples},
                  {"init_seed", cfg.train.init_seed},
                  {"snr_db_list", cfg.train_snr_list},
                  {"mixture", cfg.train_mixture}};
    json policies = json::array();
    for (Policy p : cfg.sweep_policies) policies.push_back(name(p));
    j["sweep"] = {{"snr_points_db", cfg.sweep_snr_points},
                  {"blocks_per_point", cfg.sweep_blocks_per_point},
                  {"policies", policies},
                  {"mix_formats", cfg.sweep_mix_formats},
                  {"inr_tracks_snr", cfg.sweep_inr_tracks_snr},
                  {"validation_samples", cfg.validation_samples}};
    j["lut"] = {{"samples_per_cell", cfg.lut_samples_per_cell}};
    // seed and workers are deliberately left out: the seed is reported next
    // to the hash, and the worker count must never change any output
    return j.dump();
}

std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string s = canonical_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string output_header(const RunConfig& cfg) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "config_hash=%016llx seed=%llu",
                  static_cast<unsigned long long>(config_hash(cfg)),
                  static_cast<unsigned long long>(cfg.seed));
    return buf;
}

} // namespace irx
