#include "rcsdid/data_model.hpp"

#include "rcsdid/errors.hpp"
#include "rcsdid/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace rcsdid {

PanelLayout::PanelLayout(int k_co, int k_tr, int t_pre, int t_post)
    : k_co_(k_co), k_tr_(k_tr), t_pre_(t_pre), t_post_(t_post) {
  if (k_co < 1) throw ValidationError("layout needs at least one control group");
  if (k_tr < 1) throw ValidationError("layout needs at least one treated group");
  if (t_pre < 1) throw ValidationError("layout needs at least one pre-treatment period");
  if (t_post < 1) throw ValidationError("layout needs at least one post-treatment period");
}

namespace {

std::vector<std::string> numbered_labels(int n) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) labels.push_back(std::to_string(i));
  return labels;
}

std::string cell_name(int group, int period) {
  return "(" + std::to_string(group + 1) + "," + std::to_string(period + 1) + ")";
}

}  // namespace

RCDataset::RCDataset(PanelLayout layout, std::vector<Observation> rows,
                     std::vector<std::string> group_labels,
                     std::vector<std::string> period_labels)
    : layout_(layout),
      rows_(std::move(rows)),
      group_labels_(std::move(group_labels)),
      period_labels_(std::move(period_labels)) {
  const int K = layout_.groups();
  const int T = layout_.periods();
  if (group_labels_.empty()) group_labels_ = numbered_labels(K);
  if (period_labels_.empty()) period_labels_ = numbered_labels(T);
  if (std::ssize(group_labels_) != K || std::ssize(period_labels_) != T)
    throw ValidationError("label count does not match layout");

  std::vector<long> seen(layout_.cells(), 0);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (r.group < 0 || r.group >= K || r.period < 0 || r.period >= T)
      throw ValidationError("row " + std::to_string(i + 1) + " references cell " +
                            cell_name(r.group, r.period) + " outside the layout");
    ++seen[static_cast<std::size_t>(r.group) * T + r.period];
  }
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t)
      if (seen[static_cast<std::size_t>(k) * T + t] == 0)
        throw ValidationError("empty cell " + cell_name(k, t) + ": group '" +
                              group_labels_[k] + "', time '" + period_labels_[t] + "'");
}

AggregatedPanel::AggregatedPanel(PanelLayout layout, Eigen::MatrixXd means, CountMatrix counts)
    : layout_(layout), means_(std::move(means)), counts_(std::move(counts)) {
  if (means_.rows() != layout_.groups() || means_.cols() != layout_.periods() ||
      counts_.rows() != layout_.groups() || counts_.cols() != layout_.periods())
    throw ValidationError("panel matrices do not match the layout");
  for (Eigen::Index k = 0; k < counts_.rows(); ++k)
    for (Eigen::Index t = 0; t < counts_.cols(); ++t)
      if (counts_(k, t) < 1)
        throw ValidationError("empty cell " + cell_name(static_cast<int>(k), static_cast<int>(t)));
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    compensation_ += (sum_ - t) + x;
  else
    compensation_ += (x - t) + sum_;
  sum_ = t;
}

AggregatedPanel aggregate(const RCDataset& data) {
  const auto& layout = data.layout();
  const int K = layout.groups();
  const int T = layout.periods();
  std::vector<CompensatedSum> sums(layout.cells());
  CountMatrix counts = CountMatrix::Zero(K, T);
  for (const auto& r : data.rows()) {
    sums[static_cast<std::size_t>(r.group) * T + r.period].add(r.outcome);
    ++counts(r.group, r.period);
  }
  Eigen::MatrixXd means(K, T);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t)
      means(k, t) = sums[static_cast<std::size_t>(k) * T + t].value() /
                    static_cast<double>(counts(k, t));
  return AggregatedPanel(layout, std::move(means), std::move(counts));
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace {

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

// Numeric labels sort numerically, anything else lexicographically.
std::vector<std::string> sorted_labels(std::vector<std::string> labels) {
  const bool numeric = std::all_of(labels.begin(), labels.end(),
                                   [](const std::string& l) { return parse_double(l).has_value(); });
  if (numeric) {
    std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return *parse_double(a) < *parse_double(b);
    });
  } else {
    std::sort(labels.begin(), labels.end());
  }
  return labels;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

struct RawRow {
  std::string group;
  std::string time;
  double outcome;
  int treated;  // -1 when no treated column
};

}  // namespace

RCDataset load_long_csv(const std::filesystem::path& path, const CsvSchema& schema,
                        const LayoutHints& hints) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file '" + path.string() + "'");

  if (hints.k_co && schema.treated)
    throw ValidationError("pass either a control-group count or a treated column, not both");
  if (!hints.k_co && !schema.treated)
    throw ValidationError("treated groups unspecified: need a control-group count or a treated column");
  if (!hints.t_pre) throw ValidationError("number of pre-treatment periods unspecified");

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path.string() + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = io::split_csv_line(line, 1);
  const std::size_t gcol = find_column(header, schema.group);
  const std::size_t tcol = find_column(header, schema.time);
  const std::size_t ycol = find_column(header, schema.outcome);
  std::optional<std::size_t> wcol;
  if (schema.treated) wcol = find_column(header, *schema.treated);
  const std::size_t needed = std::max({gcol, tcol, ycol, wcol.value_or(0)}) + 1;

  std::vector<RawRow> raw;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = io::split_csv_line(line, row);
    if (fields.size() < needed)
      throw ParseError("expected at least " + std::to_string(needed) + " fields, found " +
                           std::to_string(fields.size()),
                       row);
    const auto y = parse_double(fields[ycol]);
    if (!y) throw ParseError("non-numeric outcome '" + fields[ycol] + "'", row);
    int treated = -1;
    if (wcol) {
      const auto w = parse_double(fields[*wcol]);
      if (!w || (*w != 0.0 && *w != 1.0))
        throw ParseError("treated flag must be 0 or 1, found '" + fields[*wcol] + "'", row);
      treated = static_cast<int>(*w);
    }
    raw.push_back({fields[gcol], fields[tcol], *y, treated});
  }
  if (raw.empty()) throw ValidationError("'" + path.string() + "' has no data rows");

  std::map<std::string, int> treated_flag;
  for (const auto& r : raw) {
    auto [it, inserted] = treated_flag.emplace(r.group, r.treated);
    if (!inserted && it->second != r.treated)
      throw ValidationError("treated flag is not constant within group '" + r.group + "'");
  }
  std::vector<std::string> groups;
  for (const auto& [g, _] : treated_flag) groups.push_back(g);
  groups = sorted_labels(std::move(groups));

  std::vector<std::string> controls, treated;
  if (hints.k_co) {
    const int k_co = *hints.k_co;
    if (k_co < 1 || k_co >= std::ssize(groups))
      throw ValidationError("control-group count " + std::to_string(k_co) +
                            " incompatible with " + std::to_string(groups.size()) + " groups");
    controls.assign(groups.begin(), groups.begin() + k_co);
    treated.assign(groups.begin() + k_co, groups.end());
  } else {
    for (const auto& g : groups) (treated_flag[g] == 1 ? treated : controls).push_back(g);
  }

  std::vector<std::string> times;
  {
    std::map<std::string, int> unique;
    for (const auto& r : raw) unique.emplace(r.time, 0);
    for (const auto& [t, _] : unique) times.push_back(t);
    times = sorted_labels(std::move(times));
  }
  const int t_pre = *hints.t_pre;
  if (t_pre < 1 || t_pre >= std::ssize(times))
    throw ValidationError("pre-period count " + std::to_string(t_pre) + " incompatible with " +
                          std::to_string(times.size()) + " periods");

  PanelLayout layout(static_cast<int>(controls.size()), static_cast<int>(treated.size()), t_pre,
                     static_cast<int>(times.size()) - t_pre);

  std::vector<std::string> group_labels = controls;
  group_labels.insert(group_labels.end(), treated.begin(), treated.end());
  std::unordered_map<std::string, int> group_index, time_index;
  for (int i = 0; i < std::ssize(group_labels); ++i) group_index[group_labels[i]] = i;
  for (int i = 0; i < std::ssize(times); ++i) time_index[times[i]] = i;

  std::vector<Observation> rows;
  rows.reserve(raw.size());
  for (const auto& r : raw) rows.push_back({group_index.at(r.group), time_index.at(r.time), r.outcome});
  return RCDataset(layout, std::move(rows), std::move(group_labels), std::move(times));
}

void write_long_csv(const std::filesystem::path& path, const RCDataset& data) {
  io::write_atomically(path, [&](std::ostream& out) {
    out << "group,time,outcome,treated\n";
    const auto& gl = data.group_labels();
    const auto& tl = data.period_labels();
    for (const auto& r : data.rows()) {
      out << io::csv_field(gl[r.group]) << ',' << io::csv_field(tl[r.period]) << ','
          << io::format_roundtrip(r.outcome) << ',' << (data.layout().is_treated(r.group) ? 1 : 0)
          << '\n';
    }
  });
}

std::filesystem::path layout_sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".layout.json";
  return p;
}

std::optional<LayoutHints> read_layout_sidecar(const std::filesystem::path& csv) {
  const auto p = layout_sidecar_path(csv);
  std::ifstream in(p);
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    LayoutHints hints;
    if (j.contains("k_co")) hints.k_co = j.at("k_co").get<int>();
    if (j.contains("t_pre")) hints.t_pre = j.at("t_pre").get<int>();
    return hints;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad layout sidecar '" + p.string() + "': " + e.what());
  }
}

void write_layout_sidecar(const std::filesystem::path& csv, const PanelLayout& layout) {
  nlohmann::json j = {{"k_co", layout.k_co()}, {"t_pre", layout.t_pre()}};
  io::write_atomically(layout_sidecar_path(csv), [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

}  // namespace rcsdid
