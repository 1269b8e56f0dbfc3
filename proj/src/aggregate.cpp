#include "tempus/aggregate.hpp"

#include "tempus/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tempus::aggregate {

namespace {

void require_unique(const std::vector<std::string>& ids, const char* what) {
    std::set<std::string> seen;
    for (const auto& id : ids)
        if (!seen.insert(id).second)
            throw SchemaError(what, "duplicate id '" + id + "'");
}

}  // namespace

ErrorPivot::ErrorPivot(std::string metric, std::vector<std::string> models,
                       std::vector<std::string> tasks, std::vector<Cell> cells)
    : metric_(std::move(metric)),
      models_(std::move(models)),
      tasks_(std::move(tasks)),
      cells_(std::move(cells)) {
    require_unique(models_, "models");
    require_unique(tasks_, "tasks");
    if (cells_.size() != models_.size() * tasks_.size())
        throw SchemaError("cells", "expected " + std::to_string(models_.size() * tasks_.size()) +
                                       " cells, got " + std::to_string(cells_.size()));
    for (const Cell& c : cells_)
        if (c && (!std::isfinite(*c) || *c < 0.0))
            throw SchemaError("cells", "error values must be finite and >= 0");
}

std::size_t ErrorPivot::model_index(const std::string& model) const {
    auto it = std::find(models_.begin(), models_.end(), model);
    if (it == models_.end()) throw UnknownModel(model);
    return static_cast<std::size_t>(it - models_.begin());
}

WinRate win_rate(const ErrorPivot& pivot, const std::string& model) {
    const std::size_t m = pivot.model_index(model);
    double wins = 0.0;
    WinRate out;
    for (std::size_t b = 0; b < pivot.n_tasks(); ++b) {
        const Cell& mine = pivot.at(m, b);
        if (!mine) continue;
        for (std::size_t other = 0; other < pivot.n_models(); ++other) {
            if (other == m) continue;
            const Cell& theirs = pivot.at(other, b);
            if (!theirs) continue;
            ++out.n_valid_comparisons;
            if (*mine < *theirs)
                wins += 1.0;
            else if (*mine == *theirs)
                wins += 0.5;
        }
    }
    if (out.n_valid_comparisons > 0)
        out.value = wins / static_cast<double>(out.n_valid_comparisons);
    return out;
}

double clipped_ratio(double model_error, double baseline_error) {
    double ratio;
    if (baseline_error == 0.0)
        ratio = model_error == 0.0 ? 1.0 : kClipUpper;
    else
        ratio = model_error / baseline_error;
    return std::clamp(ratio, kClipLower, kClipUpper);
}

SkillScore skill_score(const ErrorPivot& pivot, const std::string& model,
                       const std::string& baseline) {
    const std::size_t m = pivot.model_index(model);
    const std::size_t base = pivot.model_index(baseline);
    SkillScore out;
    double log_sum = 0.0;
    for (std::size_t b = 0; b < pivot.n_tasks(); ++b) {
        const Cell& mine = pivot.at(m, b);
        const Cell& ref = pivot.at(base, b);
        if (!mine || !ref) continue;
        ++out.n_valid_tasks;
        log_sum += std::log(clipped_ratio(*mine, *ref));
    }
    // exp(log(100)) is not exactly 100, so pin the result to the clip range.
    if (out.n_valid_tasks > 0)
        out.value = std::clamp(1.0 - std::exp(log_sum / static_cast<double>(out.n_valid_tasks)),
                               1.0 - kClipUpper, 1.0 - kClipLower);
    return out;
}

std::vector<std::string> rank_models(const std::vector<ModelSummary>& summaries) {
    std::vector<const ModelSummary*> order;
    for (const auto& s : summaries) order.push_back(&s);
    // Missing values sort after every present value.
    auto key_less = [](const std::optional<double>& a, const std::optional<double>& b) {
        if (a && b) return *a > *b;
        return a.has_value() && !b.has_value();
    };
    std::stable_sort(order.begin(), order.end(), [&](const ModelSummary* a, const ModelSummary* b) {
        if (key_less(a->win_rate, b->win_rate)) return true;
        if (key_less(b->win_rate, a->win_rate)) return false;
        if (key_less(a->skill_score, b->skill_score)) return true;
        if (key_less(b->skill_score, a->skill_score)) return false;
        return a->model < b->model;
    });
    std::vector<std::string> out;
    for (const auto* s : order) out.push_back(s->model);
    return out;
}

AggregateReport aggregate_all(const ErrorPivot& pivot, const std::string& baseline) {
    pivot.model_index(baseline);
    AggregateReport report;
    report.metric = pivot.metric();
    report.baseline = baseline;
    for (const auto& model : pivot.models()) {
        const WinRate wr = win_rate(pivot, model);
        const SkillScore ss = skill_score(pivot, model, baseline);
        report.models.push_back({model, wr.value, ss.value, wr.n_valid_comparisons,
                                 ss.n_valid_tasks});
    }
    report.ranking = rank_models(report.models);
    return report;
}

}  // namespace tempus::aggregate
