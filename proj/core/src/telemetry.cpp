#include "dom/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dom/error.hpp"

namespace dom {

std::string to_string(LossChannel channel) { return channel == LossChannel::natural ? "natural" : "adversarial"; }

std::string to_string(MemoTag tag) {
  switch (tag) {
    case MemoTag::original_hc: return "original_hc";
    case MemoTag::transformed_hc: return "transformed_hc";
    case MemoTag::normal: return "normal";
  }
  return "normal";
}

void LossLedger::record(LossChannel channel, int epoch, std::uint64_t id, double loss) {
  const auto c = static_cast<std::size_t>(channel);
  auto [it, fresh] = last_epoch_[c].try_emplace(id, epoch);
  if (!fresh) {
    if (epoch < it->second) {
      throw Error("ledger: epoch " + std::to_string(epoch) + " for sample " + std::to_string(id) +
                  " precedes recorded epoch " + std::to_string(it->second));
    }
    if (epoch == it->second) {
      throw Error("ledger: duplicate " + to_string(channel) + " entry for sample " + std::to_string(id) +
                  " at epoch " + std::to_string(epoch));
    }
    it->second = epoch;
  }
  data_[c][epoch][id] = loss;
  ++entries_;
}

void LossLedger::record_epoch(LossChannel channel, int epoch, std::span<const std::uint64_t> ids,
                              std::span<const double> losses) {
  if (ids.size() != losses.size()) throw ShapeError("ledger: ids and losses differ in length");
  for (std::size_t i = 0; i < ids.size(); ++i) record(channel, epoch, ids[i], losses[i]);
}

bool LossLedger::has_epoch(LossChannel channel, int epoch) const {
  return data_[static_cast<std::size_t>(channel)].contains(epoch);
}

std::vector<int> LossLedger::epochs(LossChannel channel) const {
  std::vector<int> out;
  for (const auto& [e, _] : data_[static_cast<std::size_t>(channel)]) out.push_back(e);
  return out;
}

const LossById& LossLedger::at(LossChannel channel, int epoch) const {
  const auto& m = data_[static_cast<std::size_t>(channel)];
  auto it = m.find(epoch);
  if (it == m.end()) throw Error("ledger: no " + to_string(channel) + " losses recorded for epoch " + std::to_string(epoch));
  return it->second;
}

void LossLedger::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatError::Code::io, "cannot write " + path.string());
  out << "epoch,sample_id,channel,loss\n";
  out.precision(17);
  for (std::size_t c = 0; c < 2; ++c) {
    for (const auto& [epoch, losses] : data_[c]) {
      for (const auto& [id, loss] : losses) {
        out << epoch << ',' << id << ',' << to_string(static_cast<LossChannel>(c)) << ',' << loss << '\n';
      }
    }
  }
}

LossLedger LossLedger::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Code::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "epoch,sample_id,channel,loss") {
    throw FormatError(FormatError::Code::bad_magic, "ledger CSV " + path.string() + ": unexpected header");
  }
  // Group by (channel, epoch) first so the append-order rule holds for any row order.
  std::map<std::pair<int, int>, std::vector<std::pair<std::uint64_t, double>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string epoch_s, id_s, channel_s, loss_s;
    if (!std::getline(ss, epoch_s, ',') || !std::getline(ss, id_s, ',') || !std::getline(ss, channel_s, ',') ||
        !std::getline(ss, loss_s)) {
      throw FormatError(FormatError::Code::bad_value, "ledger CSV line " + std::to_string(lineno) + ": expected 4 fields");
    }
    int channel;
    if (channel_s == "natural") channel = 0;
    else if (channel_s == "adversarial") channel = 1;
    else throw FormatError(FormatError::Code::bad_value, "ledger CSV line " + std::to_string(lineno) + ": unknown channel");
    try {
      rows[{channel, std::stoi(epoch_s)}].emplace_back(std::stoull(id_s), std::stod(loss_s));
    } catch (const std::logic_error&) {
      throw FormatError(FormatError::Code::bad_value, "ledger CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  LossLedger ledger;
  for (const auto& [key, entries] : rows) {
    for (const auto& [id, loss] : entries) ledger.record(static_cast<LossChannel>(key.first), key.second, id, loss);
  }
  return ledger;
}

std::vector<double> default_bin_edges() {
  return {0.0, 0.2, 0.5, 1.0, 2.0, std::numeric_limits<double>::infinity()};
}

std::vector<double> loss_range_proportions(std::span<const double> losses, std::span<const double> edges) {
  if (edges.size() < 2 || edges.front() != 0.0 || !std::isinf(edges.back())) {
    throw Error("bin edges must start at 0 and end at +inf");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw Error("bin edges must increase strictly");
  }
  std::vector<double> counts(edges.size() - 1, 0.0);
  if (losses.empty()) return counts;
  for (double l : losses) {
    if (!(l >= 0.0)) throw Error("loss_range_proportions: negative or NaN loss");
    const auto it = std::upper_bound(edges.begin(), edges.end(), l);
    counts[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(losses.size());
  return counts;
}

std::vector<double> loss_range_proportions(const LossLedger& ledger, LossChannel channel, int epoch,
                                           std::span<const double> edges) {
  const auto& by_id = ledger.at(channel, epoch);
  std::vector<double> losses;
  losses.reserve(by_id.size());
  for (const auto& [id, l] : by_id) losses.push_back(l);
  return loss_range_proportions(losses, edges);
}

namespace {

std::vector<std::uint64_t> rank_ascending(const LossById& losses) {
  std::vector<std::pair<double, std::uint64_t>> v;
  v.reserve(losses.size());
  for (const auto& [id, l] : losses) v.emplace_back(l, id);
  std::sort(v.begin(), v.end());
  std::vector<std::uint64_t> ids;
  ids.reserve(v.size());
  for (const auto& [l, id] : v) ids.push_back(id);
  return ids;
}

}  // namespace

std::array<double, 10> overlap_rate_deciles(const LossById& natural, const LossById& adversarial) {
  if (natural.size() != adversarial.size() ||
      !std::equal(natural.begin(), natural.end(), adversarial.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw Error("overlap_rate_deciles: natural and adversarial id sets differ");
  }
  if (natural.size() < 10) throw Error("overlap_rate_deciles: need at least 10 samples");
  const auto nat = rank_ascending(natural);
  const auto adv = rank_ascending(adversarial);
  const std::size_t n = nat.size(), base = n / 10, extra = n % 10;
  std::array<double, 10> out{};
  std::size_t start = 0;
  for (std::size_t g = 0; g < 10; ++g) {
    const std::size_t len = base + (g < extra ? 1 : 0);
    std::vector<std::uint64_t> a(nat.begin() + static_cast<std::ptrdiff_t>(start),
                                 nat.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::vector<std::uint64_t> b(adv.begin() + static_cast<std::ptrdiff_t>(start),
                                 adv.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::uint64_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    out[g] = static_cast<double>(common.size()) / static_cast<double>(len);
    start += len;
  }
  return out;
}

std::vector<MemorizationTag> tag_memorization(const LossById& current, const LossById& aux, int current_epoch,
                                              double threshold) {
  std::vector<MemorizationTag> tags;
  tags.reserve(current.size());
  for (const auto& [id, loss] : current) {
    MemorizationTag t{id, MemoTag::normal, current_epoch};
    if (loss < threshold) {
      auto it = aux.find(id);
      if (it == aux.end()) throw Error("tag_memorization: no auxiliary loss for sample " + std::to_string(id));
      t.tag = it->second < threshold ? MemoTag::original_hc : MemoTag::transformed_hc;
    }
    tags.push_back(t);
  }
  return tags;
}

std::vector<MemorizationTag> tag_memorization(const LossLedger& ledger, const LossById& aux, int current_epoch,
                                              double threshold) {
  return tag_memorization(ledger.at(LossChannel::natural, current_epoch), aux, current_epoch, threshold);
}

PersistenceCurves persistence_curves(const LossLedger& ledger, std::span<const MemorizationTag> tags,
                                     int removal_epoch, int horizon) {
  std::vector<std::uint64_t> original, transformed;
  for (const auto& t : tags) {
    if (t.tag == MemoTag::original_hc) original.push_back(t.id);
    if (t.tag == MemoTag::transformed_hc) transformed.push_back(t.id);
  }
  if (original.empty()) throw Error("persistence_curves: group original_hc is empty");
  if (transformed.empty()) throw Error("persistence_curves: group transformed_hc is empty");
  if (horizon < 0) throw Error("persistence_curves: negative horizon");

  const auto group_mean = [](const LossById& losses, const std::vector<std::uint64_t>& ids, int epoch) {
    double sum = 0.0;
    for (auto id : ids) {
      auto it = losses.find(id);
      if (it == losses.end()) {
        throw Error("persistence_curves: sample " + std::to_string(id) + " has no loss at epoch " + std::to_string(epoch));
      }
      sum += it->second;
    }
    return sum / static_cast<double>(ids.size());
  };

  PersistenceCurves out;
  for (int e = removal_epoch; e <= removal_epoch + horizon; ++e) {
    const auto& losses = ledger.at(LossChannel::natural, e);
    out.epochs.push_back(e);
    out.original.push_back(group_mean(losses, original, e));
    out.transformed.push_back(group_mean(losses, transformed, e));
  }
  return out;
}

GroupedAdversarialLoss adversarial_loss_by_natural_group(const LossLedger& ledger, std::span<const int> epochs,
                                                         double natural_threshold) {
  GroupedAdversarialLoss g;
  double low = 0.0, high = 0.0;
  for (int e : epochs) {
    const auto& nat = ledger.at(LossChannel::natural, e);
    const auto& adv = ledger.at(LossChannel::adversarial, e);
    for (const auto& [id, a] : adv) {
      auto it = nat.find(id);
      if (it == nat.end()) continue;
      if (it->second < natural_threshold) {
        low += a;
        ++g.low_count;
      } else {
        high += a;
        ++g.high_count;
      }
    }
  }
  if (g.low_count) g.low_natural_mean = low / static_cast<double>(g.low_count);
  if (g.high_count) g.high_natural_mean = high / static_cast<double>(g.high_count);
  return g;
}

}  // namespace dom
