#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcsdid {

// Group/period structure shared by every estimator. Groups are ordered with
// the controls first and the treated groups last; periods are ordered with the
// pre-treatment periods first. All indices are 0-based internally; messages
// and reports use 1-based ids.
class PanelLayout {
 public:
  PanelLayout(int k_co, int k_tr, int t_pre, int t_post);

  int k_co() const noexcept { return k_co_; }
  int k_tr() const noexcept { return k_tr_; }
  int t_pre() const noexcept { return t_pre_; }
  int t_post() const noexcept { return t_post_; }
  int groups() const noexcept { return k_co_ + k_tr_; }
  int periods() const noexcept { return t_pre_ + t_post_; }
  std::size_t cells() const noexcept {
    return static_cast<std::size_t>(groups()) * static_cast<std::size_t>(periods());
  }

  bool is_treated(int group) const noexcept { return group >= k_co_; }
  bool is_post(int period) const noexcept { return period >= t_pre_; }
  // W_{k,t}
  bool is_exposed(int group, int period) const noexcept {
    return is_treated(group) && is_post(period);
  }

  friend bool operator==(const PanelLayout&, const PanelLayout&) = default;

 private:
  int k_co_;
  int k_tr_;
  int t_pre_;
  int t_post_;
};

struct Observation {
  int group;  // 0-based, controls first
  int period; // 0-based, pre-periods first
  double outcome;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// Individual-level repeated cross-sections. Construction validates the
// layout bounds and that every (group, period) cell holds at least one row.
class RCDataset {
 public:
  RCDataset(PanelLayout layout, std::vector<Observation> rows,
            std::vector<std::string> group_labels = {},
            std::vector<std::string> period_labels = {});

  const PanelLayout& layout() const noexcept { return layout_; }
  std::span<const Observation> rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  // Original labels from the source file (or "1".."K" when generated).
  const std::vector<std::string>& group_labels() const noexcept { return group_labels_; }
  const std::vector<std::string>& period_labels() const noexcept { return period_labels_; }

 private:
  PanelLayout layout_;
  std::vector<Observation> rows_;
  std::vector<std::string> group_labels_;
  std::vector<std::string> period_labels_;
};

using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

// K x T cell means and counts.
class AggregatedPanel {
 public:
  AggregatedPanel(PanelLayout layout, Eigen::MatrixXd means, CountMatrix counts);

  const PanelLayout& layout() const noexcept { return layout_; }
  const Eigen::MatrixXd& means() const noexcept { return means_; }
  const CountMatrix& counts() const noexcept { return counts_; }
  long total_count() const noexcept { return counts_.sum(); }

 private:
  PanelLayout layout_;
  Eigen::MatrixXd means_;
  CountMatrix counts_;
};

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

AggregatedPanel aggregate(const RCDataset& data);

struct CsvSchema {
  std::string group = "group";
  std::string time = "time";
  std::string outcome = "outcome";
  // When set, a 0/1 column (constant within group) marks treated groups.
  std::optional<std::string> treated;
};

// How controls/pre-periods are identified when loading. Exactly one of
// `k_co` and `schema.treated` must be provided; `t_pre` is always required.
// With `k_co`, groups are sorted by label and the last K - k_co are treated.
struct LayoutHints {
  std::optional<int> k_co;
  std::optional<int> t_pre;
};

RCDataset load_long_csv(const std::filesystem::path& path, const CsvSchema& schema,
                        const LayoutHints& hints);

// Writes `group,time,outcome,treated` with round-trip precision.
void write_long_csv(const std::filesystem::path& path, const RCDataset& data);

// Sidecar `<csv>.layout.json` holding {"k_co": .., "t_pre": ..}.
std::filesystem::path layout_sidecar_path(const std::filesystem::path& csv);
std::optional<LayoutHints> read_layout_sidecar(const std::filesystem::path& csv);
void write_layout_sidecar(const std::filesystem::path& csv, const PanelLayout& layout);

}  // namespace rcsdid
