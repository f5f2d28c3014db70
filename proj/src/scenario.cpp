#include "plume_scout/scenario.hpp"

#include <cmath>
#include <filesystem>

#include "plume_scout/errors.hpp"

namespace plume_scout {

void ScenarioSpec::validate() const {
    make_grid(static_cast<long long>(grid.rows), static_cast<long long>(grid.cols), grid.spacing);
    if (const auto* plume = std::get_if<PlumeSpec>(&truth)) plume->validate(grid);
    covariance.validate();
    background.validate();
    if (episode.budgets_m.empty()) throw InvalidArgument("episode: at least one budget is required");
    for (double b : episode.budgets_m) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("episode: budgets must be finite and >= 0");
    }
    if (episode.max_steps && *episode.max_steps < 1) throw InvalidArgument("episode: max_steps must be >= 1");
    if (reward.sign != 1 && reward.sign != -1) throw InvalidArgument("reward: sign must be +1 or -1");
}

Scenario build_scenario(const ScenarioSpec& spec, const std::string& base_dir) {
    spec.validate();
    Field truth = std::visit(
        [&](const auto& source) -> Field {
            using T = std::decay_t<decltype(source)>;
            if constexpr (std::is_same_v<T, PlumeSpec>) {
                return gaussian_plume_field(spec.grid, source);
            } else {
                std::filesystem::path p(source.path);
                if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
                return load_field_csv_file(p.string(), spec.grid);
            }
        },
        spec.truth);
    if ((truth.values.array() < 0.0).any()) throw InvalidArgument("ground-truth field has negative concentrations");

    Field background = sample_background(truth, spec.covariance, spec.background);
    BackgroundCov cov = build_background_cov(background, spec.covariance);
    return Scenario{spec, std::move(truth), std::move(background), std::move(cov)};
}

ScenarioSpec paperlike_preset() {
    ScenarioSpec spec;
    spec.grid = GridSpec{10, 10, 50.0};
    PlumeSpec plume;
    plume.background_level = 0.0;
    plume.sources = {
        PlumeSource{3, 2, 300.0, 30.0},
        PlumeSource{6, 6, 80.0, 45.0},
        PlumeSource{2, 7, 40.0, 45.0},
    };
    spec.truth = plume;
    spec.covariance = CovarianceModel{0.3, 0.01, 0.0, 1e-6};
    spec.background = BackgroundSpec{5, 3.0, 7};
    spec.episode = EpisodeSpec{{2000.0}, std::nullopt, true};
    spec.reward = RewardSpec{RewardMode::da, +1};
    return spec;
}

}  // namespace plume_scout
