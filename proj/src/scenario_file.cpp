#include "plume_scout/scenario_file.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string>

#include "plume_scout/errors.hpp"

namespace plume_scout {

using nlohmann::json;

namespace {

const json& require_object(const json& doc, const std::string& where) {
    if (!doc.is_object()) throw FormatError("scenario: '" + where + "' must be an object");
    return doc;
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw FormatError("scenario: unknown key '" + key + "' in '" + where + "'");
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw FormatError("scenario: '" + where + "." + key + "' has the wrong type");
    }
}

template <typename T>
T get_required(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw FormatError("scenario: missing '" + where + "." + key + "'");
    return get_or<T>(obj, key, T{}, where);
}

const char* mode_name(RewardMode m) { return m == RewardMode::da ? "da" : "gt"; }

}  // namespace

json scenario_to_json(const ScenarioSpec& spec) {
    json doc;
    doc["grid"] = {{"rows", spec.grid.rows}, {"cols", spec.grid.cols}, {"spacing_m", spec.grid.spacing}};
    if (const auto* plume = std::get_if<PlumeSpec>(&spec.truth)) {
        json sources = json::array();
        for (const auto& s : plume->sources) {
            sources.push_back(
                {{"row", s.row}, {"col", s.col}, {"amplitude_ppm", s.amplitude}, {"length_scale_m", s.length_scale}});
        }
        doc["truth"] = {{"plume", {{"sources", sources}, {"background_level_ppm", plume->background_level}}}};
    } else {
        doc["truth"] = {{"csv_path", std::get<CsvTruth>(spec.truth).path}};
    }
    doc["covariance"] = {{"alpha", spec.covariance.alpha},
                         {"delta_per_m", spec.covariance.delta},
                         {"v0", spec.covariance.v0},
                         {"jitter", spec.covariance.jitter}};
    doc["background"] = {{"k", spec.background.k}, {"bias", spec.background.bias}, {"seed", spec.background.seed}};
    json episode;
    if (spec.episode.budgets_m.size() == 1) {
        episode["budget_m"] = spec.episode.budgets_m.front();
    } else {
        episode["budget_m"] = spec.episode.budgets_m;
    }
    episode["max_steps"] = spec.episode.max_steps ? json(*spec.episode.max_steps) : json(nullptr);
    episode["sense_at_start"] = spec.episode.sense_at_start;
    doc["episode"] = episode;
    doc["reward"] = {{"mode", mode_name(spec.reward.mode)}, {"sign", spec.reward.sign}};
    return doc;
}

ScenarioSpec scenario_from_json(const json& doc) {
    require_object(doc, "<root>");
    reject_unknown(doc, "<root>", {"grid", "truth", "covariance", "background", "episode", "reward"});
    ScenarioSpec spec;

    if (!doc.contains("grid")) throw FormatError("scenario: missing 'grid'");
    const json& grid = require_object(doc.at("grid"), "grid");
    reject_unknown(grid, "grid", {"rows", "cols", "spacing_m"});
    spec.grid = make_grid(get_required<long long>(grid, "rows", "grid"), get_required<long long>(grid, "cols", "grid"),
                          get_required<double>(grid, "spacing_m", "grid"));

    if (!doc.contains("truth")) throw FormatError("scenario: missing 'truth'");
    const json& truth = require_object(doc.at("truth"), "truth");
    reject_unknown(truth, "truth", {"plume", "csv_path"});
    if (truth.contains("plume") == truth.contains("csv_path")) {
        throw FormatError("scenario: 'truth' needs exactly one of 'plume' or 'csv_path'");
    }
    if (truth.contains("plume")) {
        const json& p = require_object(truth.at("plume"), "truth.plume");
        reject_unknown(p, "truth.plume", {"sources", "background_level_ppm"});
        PlumeSpec plume;
        plume.background_level = get_or<double>(p, "background_level_ppm", 0.0, "truth.plume");
        if (p.contains("sources")) {
            if (!p.at("sources").is_array()) throw FormatError("scenario: 'truth.plume.sources' must be an array");
            for (const auto& s : p.at("sources")) {
                const std::string where = "truth.plume.sources[]";
                require_object(s, where);
                reject_unknown(s, where, {"row", "col", "amplitude_ppm", "length_scale_m"});
                const auto row = get_required<long long>(s, "row", where);
                const auto col = get_required<long long>(s, "col", where);
                if (row < 0 || col < 0) throw InvalidArgument("plume source coordinates must be non-negative");
                plume.sources.push_back(PlumeSource{static_cast<std::size_t>(row), static_cast<std::size_t>(col),
                                                    get_required<double>(s, "amplitude_ppm", where),
                                                    get_required<double>(s, "length_scale_m", where)});
            }
        }
        spec.truth = plume;
    } else {
        spec.truth = CsvTruth{get_required<std::string>(truth, "csv_path", "truth")};
    }

    if (doc.contains("covariance")) {
        const json& c = require_object(doc.at("covariance"), "covariance");
        reject_unknown(c, "covariance", {"alpha", "delta_per_m", "v0", "jitter"});
        spec.covariance.alpha = get_or(c, "alpha", spec.covariance.alpha, "covariance");
        spec.covariance.delta = get_or(c, "delta_per_m", spec.covariance.delta, "covariance");
        spec.covariance.v0 = get_or(c, "v0", spec.covariance.v0, "covariance");
        spec.covariance.jitter = get_or(c, "jitter", spec.covariance.jitter, "covariance");
    }
    if (doc.contains("background")) {
        const json& b = require_object(doc.at("background"), "background");
        reject_unknown(b, "background", {"k", "bias", "seed"});
        spec.background.k = get_or(b, "k", spec.background.k, "background");
        spec.background.bias = get_or(b, "bias", spec.background.bias, "background");
        spec.background.seed = get_or(b, "seed", spec.background.seed, "background");
    }
    if (doc.contains("episode")) {
        const json& e = require_object(doc.at("episode"), "episode");
        reject_unknown(e, "episode", {"budget_m", "max_steps", "sense_at_start"});
        if (e.contains("budget_m")) {
            const json& b = e.at("budget_m");
            if (b.is_number()) {
                spec.episode.budgets_m = {b.get<double>()};
            } else if (b.is_array()) {
                spec.episode.budgets_m = get_or<std::vector<double>>(e, "budget_m", {}, "episode");
            } else {
                throw FormatError("scenario: 'episode.budget_m' must be a number or an array");
            }
        }
        if (e.contains("max_steps") && !e.at("max_steps").is_null()) {
            spec.episode.max_steps = get_or(e, "max_steps", 1, "episode");
        }
        spec.episode.sense_at_start = get_or(e, "sense_at_start", spec.episode.sense_at_start, "episode");
    }
    if (doc.contains("reward")) {
        const json& r = require_object(doc.at("reward"), "reward");
        reject_unknown(r, "reward", {"mode", "sign"});
        const auto mode = get_or<std::string>(r, "mode", "da", "reward");
        if (mode == "da") {
            spec.reward.mode = RewardMode::da;
        } else if (mode == "gt") {
            spec.reward.mode = RewardMode::gt;
        } else {
            throw FormatError("scenario: 'reward.mode' must be 'da' or 'gt'");
        }
        spec.reward.sign = get_or(r, "sign", spec.reward.sign, "reward");
    }
    spec.validate();
    return spec;
}

ScenarioSpec load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("scenario '" + path.string() + "': " + e.what());
    }
    return scenario_from_json(doc);
}

void save_scenario_file(const std::filesystem::path& path, const ScenarioSpec& spec) {
    spec.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write scenario '" + path.string() + "'");
    out << scenario_to_json(spec).dump(2) << '\n';
    if (!out) throw IoError("failed writing scenario '" + path.string() + "'");
}

}  // namespace plume_scout
