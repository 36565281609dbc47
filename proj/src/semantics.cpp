#include "polite/semantics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <stdexcept>

#include "polite/io.hpp"

namespace polite::semantics {

namespace {

std::int64_t parse_int(const std::string& s, const char* what) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error(std::string("cannot parse ") + what + ": '" + s + "'");
  return out;
}

}  // namespace

void EndorsementCounts::set(std::size_t u, std::size_t s, std::int64_t y, std::int64_t n) {
  yes[u * num_states + s] = y;
  total[u * num_states + s] = n;
}

void EndorsementCounts::validate() const {
  if (utterances.empty() || num_states == 0)
    throw std::invalid_argument("endorsements: empty table");
  if (yes.size() != utterances.size() * num_states || total.size() != yes.size())
    throw std::invalid_argument("endorsements: shape mismatch");
  for (std::size_t u = 0; u < utterances.size(); ++u)
    for (std::size_t s = 0; s < num_states; ++s) {
      auto y = yes_at(u, s), n = total_at(u, s);
      std::string cell = "utterance '" + utterances[u] + "', state " + std::to_string(s + 1);
      if (n <= 0) throw std::invalid_argument("endorsements: no trials for " + cell);
      if (y < 0 || y > n)
        throw std::invalid_argument("endorsements: yes outside [0, total] for " + cell);
    }
}

rsa::SemanticsTable estimate_theta(const EndorsementCounts& counts) {
  counts.validate();
  rsa::SemanticsTable table;
  table.utterances = counts.utterances;
  table.num_states = counts.num_states;
  table.theta = Mat(counts.utterances.size(), counts.num_states);
  for (std::size_t u = 0; u < counts.utterances.size(); ++u)
    for (std::size_t s = 0; s < counts.num_states; ++s)
      table.theta.at(u, s) = (static_cast<double>(counts.yes_at(u, s)) + 1.0) /
                             (static_cast<double>(counts.total_at(u, s)) + 2.0);
  return table;
}

void write_semantics_csv(const std::filesystem::path& p, const rsa::SemanticsTable& table) {
  table.validate();
  std::string out = "utterance,state,theta\n";
  for (std::size_t u = 0; u < table.utterances.size(); ++u)
    for (std::size_t s = 0; s < table.num_states; ++s)
      out += table.utterances[u] + "," + std::to_string(s + 1) + "," +
             format_double(table.at(u, s)) + "\n";
  io::write_file(p, out);
}

rsa::SemanticsTable read_semantics_csv(const std::filesystem::path& p) {
  auto lines = io::read_lines(p);
  if (lines.empty() || lines[0] != "utterance,state,theta")
    throw std::runtime_error(p.string() + ": expected header 'utterance,state,theta'");
  rsa::SemanticsTable table;
  std::vector<std::string> utts;
  std::size_t max_state = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> per_utt;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = io::split_csv(lines[i]);
    if (f.size() != 3) throw std::runtime_error(p.string() + ": malformed row " + lines[i]);
    std::size_t u;
    auto it = std::find(utts.begin(), utts.end(), f[0]);
    if (it == utts.end()) {
      u = utts.size();
      utts.push_back(f[0]);
      per_utt.emplace_back();
    } else {
      u = static_cast<std::size_t>(it - utts.begin());
    }
    auto state = parse_int(f[1], "state");
    if (state < 1) throw std::runtime_error(p.string() + ": state must be >= 1");
    max_state = std::max(max_state, static_cast<std::size_t>(state));
    per_utt[u].emplace_back(static_cast<std::size_t>(state - 1), parse_double(f[2]));
  }
  if (utts.empty()) throw std::runtime_error(p.string() + ": no data rows");
  table.utterances = utts;
  table.num_states = max_state;
  table.theta = Mat(utts.size(), max_state, -1.0);
  for (std::size_t u = 0; u < utts.size(); ++u)
    for (auto& [s, t] : per_utt[u]) {
      if (table.theta.at(u, s) >= 0.0)
        throw std::runtime_error(p.string() + ": duplicate cell for '" + utts[u] + "', state " +
                                 std::to_string(s + 1));
      table.theta.at(u, s) = t;
    }
  for (std::size_t u = 0; u < utts.size(); ++u)
    for (std::size_t s = 0; s < max_state; ++s)
      if (table.theta.at(u, s) < 0.0)
        throw std::runtime_error(p.string() + ": missing cell for '" + utts[u] + "', state " +
                                 std::to_string(s + 1));
  table.validate();
  return table;
}

void write_endorsements_csv(const std::filesystem::path& p, const EndorsementCounts& counts) {
  counts.validate();
  std::string out = "utterance,state,yes,total\n";
  for (std::size_t u = 0; u < counts.utterances.size(); ++u)
    for (std::size_t s = 0; s < counts.num_states; ++s)
      out += counts.utterances[u] + "," + std::to_string(s + 1) + "," +
             std::to_string(counts.yes_at(u, s)) + "," + std::to_string(counts.total_at(u, s)) +
             "\n";
  io::write_file(p, out);
}

EndorsementCounts read_endorsements_csv(const std::filesystem::path& p) {
  auto lines = io::read_lines(p);
  if (lines.empty() || lines[0] != "utterance,state,yes,total")
    throw std::runtime_error(p.string() + ": expected header 'utterance,state,yes,total'");
  std::vector<std::string> utts;
  std::vector<std::vector<std::array<std::int64_t, 3>>> per_utt;  // state, yes, total
  std::size_t max_state = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = io::split_csv(lines[i]);
    if (f.size() != 4) throw std::runtime_error(p.string() + ": malformed row " + lines[i]);
    std::size_t u;
    auto it = std::find(utts.begin(), utts.end(), f[0]);
    if (it == utts.end()) {
      u = utts.size();
      utts.push_back(f[0]);
      per_utt.emplace_back();
    } else {
      u = static_cast<std::size_t>(it - utts.begin());
    }
    auto state = parse_int(f[1], "state");
    if (state < 1) throw std::runtime_error(p.string() + ": state must be >= 1");
    max_state = std::max(max_state, static_cast<std::size_t>(state));
    per_utt[u].push_back({state - 1, parse_int(f[2], "yes"), parse_int(f[3], "total")});
  }
  if (utts.empty()) throw std::runtime_error(p.string() + ": no data rows");
  EndorsementCounts counts;
  counts.utterances = utts;
  counts.num_states = max_state;
  counts.yes.assign(utts.size() * max_state, -1);
  counts.total.assign(utts.size() * max_state, -1);
  for (std::size_t u = 0; u < utts.size(); ++u)
    for (auto& [s, y, n] : per_utt[u]) {
      std::size_t idx = u * max_state + static_cast<std::size_t>(s);
      if (counts.total[idx] >= 0)
        throw std::runtime_error(p.string() + ": duplicate cell for '" + utts[u] + "'");
      counts.yes[idx] = y;
      counts.total[idx] = n;
    }
  for (auto t : counts.total)
    if (t < 0) throw std::runtime_error(p.string() + ": missing cells");
  counts.validate();
  return counts;
}

}  // namespace polite::semantics
