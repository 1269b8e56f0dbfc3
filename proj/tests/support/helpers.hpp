#pragma once

#include "oracles.hpp"
#include "tempus/core.hpp"

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

inline tempus::Matrix to_matrix(const oracle::Grid& g) {
    const auto rows = static_cast<Eigen::Index>(g.size());
    const auto cols = static_cast<Eigen::Index>(g.empty() ? 0 : g.front().size());
    tempus::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index t = 0; t < cols; ++t)
            m(i, t) = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
    return m;
}

inline tempus::Matrix row(std::initializer_list<double> values) {
    return to_matrix({std::vector<double>(values)});
}

inline tempus::TaskSpec make_task(const std::string& id, const std::vector<double>& y,
                                  std::size_t l, std::size_t h) {
    auto frame = std::make_shared<tempus::SeriesFrame>();
    frame->targets = to_matrix({y});
    frame->covariates.resize(0, static_cast<Eigen::Index>(y.size()));
    for (std::size_t t = 0; t < y.size(); ++t) frame->timestamps.push_back(std::to_string(t));
    tempus::TaskSpec task;
    task.id = id;
    task.context_len = l;
    task.horizon = h;
    task.n_targets = 1;
    task.value_kinds = {tempus::ValueKind::continuous};
    task.data = std::move(frame);
    return tempus::validate_task(std::move(task));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("tempus_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testing_support
