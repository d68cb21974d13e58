#include "wfadj/csv_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace wfadj::csv {
namespace {

struct Table {
  std::string file;
  std::vector<std::vector<std::string>> rows;  // excluding header
  std::vector<int> lines;                      // 1-based source line per row
};

[[noreturn]] void fail(const std::string& file, int line, int column, const std::string& what) {
  std::ostringstream os;
  os << file << ':' << line;
  if (column > 0) os << ": column " << column;
  os << ": " << what;
  throw InputError(os.str());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

Table read_table(const fs::path& path, const std::vector<std::string>& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  Table t;
  t.file = path.string();
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (split(line) != header) fail(t.file, lineno, 0, "expected header '" + join(header) + "'");
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != header.size()) {
      fail(t.file, lineno, 0,
           "expected " + std::to_string(header.size()) + " fields, found " +
               std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  if (!have_header) fail(t.file, 1, 0, "missing header '" + join(header) + "'");
  return t;
}

template <class T>
T parse(const Table& t, std::size_t row, int col, const char* what) {
  const auto& s = t.rows[row][static_cast<std::size_t>(col)];
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(t.file, t.lines[row], col + 1, std::string("invalid ") + what + " '" + s + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) fail(t.file, t.lines[row], col + 1, std::string("non-finite ") + what);
  }
  return value;
}

std::string join_set(const std::vector<int>& set) {
  std::string s;
  for (std::size_t i = 0; i < set.size(); ++i) s += (i ? ";" : "") + std::to_string(set[i]);
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) return "0";
  std::array<char, 40> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return {buf.data(), end};
}

std::vector<PatientCourse> read_cohort(const fs::path& patients, const fs::path& scans) {
  const auto pt = read_table(patients, {"patient_id", "start_day", "discontinuation_day"});
  const auto st = read_table(scans, {"patient_id", "offset_day", "change_pct"});

  std::vector<PatientCourse> cohort;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < pt.rows.size(); ++r) {
    PatientCourse pc;
    pc.patient_id = pt.rows[r][0];
    if (pc.patient_id.empty()) fail(pt.file, pt.lines[r], 1, "empty patient_id");
    pc.start_day = parse<Day>(pt, r, 1, "start_day");
    if (!pt.rows[r][2].empty()) pc.discontinuation_day = parse<Day>(pt, r, 2, "discontinuation_day");
    if (!index.emplace(pc.patient_id, cohort.size()).second) {
      fail(pt.file, pt.lines[r], 1, "duplicate patient_id '" + pc.patient_id + "'");
    }
    cohort.push_back(std::move(pc));
  }

  std::vector<std::vector<int>> scan_lines(cohort.size());
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    auto it = index.find(st.rows[r][0]);
    if (it == index.end()) fail(st.file, st.lines[r], 1, "unknown patient_id '" + st.rows[r][0] + "'");
    Scan s{parse<Day>(st, r, 1, "offset_day"), parse<double>(st, r, 2, "change_pct")};
    if (s.offset_day <= 0) fail(st.file, st.lines[r], 2, "offset_day must be positive");
    if (s.change_pct < -100.0) fail(st.file, st.lines[r], 3, "change_pct below -100");
    cohort[it->second].scans.push_back(s);
    scan_lines[it->second].push_back(st.lines[r]);
  }

  for (std::size_t i = 0; i < cohort.size(); ++i) {
    auto& pc = cohort[i];
    std::stable_sort(pc.scans.begin(), pc.scans.end(),
                     [](const Scan& a, const Scan& b) { return a.offset_day < b.offset_day; });
    try {
      pc.validate();
    } catch (const InputError& e) {
      fail(st.file, scan_lines[i].empty() ? 0 : scan_lines[i].back(), 0, e.what());
    }
  }
  return cohort;
}

void write_cohort(std::span<const PatientCourse> cohort, const fs::path& patients,
                  const fs::path& scans) {
  std::ostringstream p, s;
  p << "patient_id,start_day,discontinuation_day\n";
  s << "patient_id,offset_day,change_pct\n";
  for (const auto& pc : cohort) {
    p << pc.patient_id << ',' << pc.start_day << ',';
    if (pc.discontinuation_day) p << *pc.discontinuation_day;
    p << '\n';
    for (const auto& sc : pc.scans) {
      s << pc.patient_id << ',' << sc.offset_day << ',' << format_double(sc.change_pct) << '\n';
    }
  }
  write_file(patients, p.str());
  write_file(scans, s.str());
}

std::vector<WeightedObservation> read_observations(const fs::path& path) {
  const auto t = read_table(path, {"z", "p_event"});
  std::vector<WeightedObservation> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    WeightedObservation o{parse<double>(t, r, 0, "z"), parse<double>(t, r, 1, "p_event")};
    if (o.p_event < 0.0 || o.p_event > 1.0) fail(t.file, t.lines[r], 2, "p_event outside [0, 1]");
    out.push_back(o);
  }
  return out;
}

std::string interim_csv(const InterimDataset& ds, const CategoryPosterior* posterior) {
  std::ostringstream os;
  os << "patient_id,z,u,candidate_set,ongoing,filter_pass,p_event\n";
  for (const auto& r : ds.records) {
    double p = 1.0;
    if (posterior && r.latent()) p = posterior->event_probs.at(r.patient_id);
    os << r.patient_id << ',' << format_double(r.z) << ',' << r.u << ','
       << join_set(r.candidate_set) << ',' << (r.ongoing ? "true" : "false") << ','
       << (r.filter_pass ? "true" : "false") << ',' << format_double(p) << '\n';
  }
  return os.str();
}

std::string theta_csv(const CategoryPosterior& posterior) {
  std::ostringstream os;
  os << "category,mean,variance\n";
  for (std::size_t k = 0; k < posterior.samples_summary.size(); ++k) {
    os << k + 1 << ',' << format_double(posterior.samples_summary[k].mean) << ','
       << format_double(posterior.samples_summary[k].variance) << '\n';
  }
  return os.str();
}

std::string theta_csv(const CategoryProbabilities& theta) {
  std::ostringstream os;
  os << "category,theta\n";
  for (int k = 1; k <= theta.K(); ++k) os << k << ',' << format_double(theta[k]) << '\n';
  return os.str();
}

std::string event_probs_csv(const CategoryPosterior& posterior) {
  std::ostringstream os;
  os << "patient_id,p_event,q_censor\n";
  for (const auto& [id, p] : posterior.event_probs) {
    os << id << ',' << format_double(p) << ',' << format_double(1.0 - p) << '\n';
  }
  return os.str();
}

std::string curve_csv(const StepCurve& curve) {
  std::ostringstream os;
  os << "z,survival,lower,upper\n";
  for (std::size_t i = 0; i < curve.breakpoints.size(); ++i) {
    const auto& b = curve.breakpoints[i];
    const Band band = curve.bands ? (*curve.bands)[i] : Band{b.value, b.value};
    os << format_double(b.z) << ',' << format_double(b.value) << ',' << format_double(band.lower)
       << ',' << format_double(band.upper) << '\n';
  }
  return os.str();
}

std::string waterfall_csv(const WaterfallCurve& wf, int patient_count) {
  const double scale = patient_count > 0 ? patient_count : 1.0;
  std::ostringstream os;
  os << "fraction_start,fraction_end,value,lower,upper\n";
  for (std::size_t i = 0; i < wf.segments.size(); ++i) {
    const auto& s = wf.segments[i];
    os << format_double(wf.fraction_start(i) * scale) << ','
       << format_double(s.fraction_end() * scale) << ',' << format_double(s.value) << ','
       << format_double(s.lower) << ',' << format_double(s.upper) << '\n';
  }
  return os.str();
}

std::string summary_csv(const ReplicationResult& result) {
  std::ostringstream os;
  os << "fraction,mean_adj_dev,mean_unadj_dev,n_effective\n";
  for (const auto& row : result.summary) {
    os << format_double(row.fraction) << ',' << format_double(row.mean_adj_dev) << ','
       << format_double(row.mean_unadj_dev) << ',' << row.n_effective << '\n';
  }
  return os.str();
}

WaterfallCurve read_waterfall(const fs::path& path) {
  const auto t = read_table(path, {"fraction_start", "fraction_end", "value", "lower", "upper"});
  if (t.rows.empty()) fail(t.file, 2, 0, "no segments");
  WaterfallCurve wf;
  std::vector<double> ends;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ends.push_back(parse<double>(t, r, 1, "fraction_end"));
    if (r > 0 && !(ends[r] > ends[r - 1])) {
      fail(t.file, t.lines[r], 2, "fraction_end must be strictly increasing");
    }
    const double v = parse<double>(t, r, 2, "value");
    const double lo = parse<double>(t, r, 3, "lower");
    const double hi = parse<double>(t, r, 4, "upper");
    wf.has_bands = wf.has_bands || lo != v || hi != v;
    wf.segments.push_back({0.0, v, lo, hi});
  }
  const double total = ends.back();
  for (std::size_t r = 0; r < ends.size(); ++r) {
    wf.segments[r].tail_mass = r + 1 == ends.size() ? 0.0 : 1.0 - ends[r] / total;
  }
  return wf;
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot write file");
  out << content;
}

}  // namespace wfadj::csv
