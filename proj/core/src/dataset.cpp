#include "funfuse/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace funfuse {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, long line_no) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v))
    throw std::runtime_error("non-numeric field '" + s + "' at line " +
                             std::to_string(line_no));
  return v;
}

int parse_label(const std::string& s, long line_no) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1)
    throw std::runtime_error("invalid label '" + s + "' at line " +
                             std::to_string(line_no));
  return v;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void Curve::validate() const {
  if (timepoints.size() != values.size())
    throw std::invalid_argument("curve '" + id +
                                "': timepoint/value length mismatch");
  if (timepoints.empty())
    throw std::invalid_argument("curve '" + id + "': empty");
  for (std::size_t i = 0; i < timepoints.size(); ++i) {
    if (!std::isfinite(timepoints[i]) || !std::isfinite(values[i]))
      throw std::invalid_argument("curve '" + id + "': non-finite entry");
    if (i > 0 && !(timepoints[i] > timepoints[i - 1]))
      throw std::invalid_argument("curve '" + id +
                                  "': timepoints must be strictly increasing");
  }
}

long Dataset::total_points() const {
  long n = 0;
  for (const auto& c : curves) n += static_cast<long>(c.timepoints.size());
  return n;
}

void Dataset::validate() const {
  if (curves.empty()) throw std::invalid_argument("dataset has no curves");
  for (const auto& c : curves) {
    c.validate();
    for (double t : c.timepoints)
      if (!domain.contains(t))
        throw std::invalid_argument("curve '" + c.id +
                                    "': timepoint outside dataset domain");
  }
  if (true_labels) {
    if (true_labels->size() != curves.size())
      throw std::invalid_argument("true_labels length differs from curve count");
    for (int g : *true_labels)
      if (g < 1) throw std::invalid_argument("labels must be 1-based");
  }
}

double PairIntervals::total_measure() const {
  double m = 0.0;
  for (const auto& iv : intervals) m += std::max(0.0, iv.length());
  return m;
}

Dataset read_dataset(std::istream& in, std::optional<Interval> domain) {
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_csv_line(line);
  bool has_label = false;
  if (header.size() == 4 && header[3] == "label")
    has_label = true;
  else if (header.size() != 3)
    throw std::runtime_error("expected header curve_id,t,y[,label]");
  if (header[0] != "curve_id" || header[1] != "t" || header[2] != "y")
    throw std::runtime_error("expected header curve_id,t,y[,label]");

  struct Row {
    double t, y;
  };
  std::map<std::string, std::vector<Row>> by_id;
  std::map<std::string, int> labels;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("wrong field count at line " +
                               std::to_string(line_no));
    double t = parse_double(fields[1], line_no);
    double y = parse_double(fields[2], line_no);
    by_id[fields[0]].push_back({t, y});
    if (has_label) {
      int g = parse_label(fields[3], line_no);
      auto [it, inserted] = labels.emplace(fields[0], g);
      if (!inserted && it->second != g)
        throw std::runtime_error("conflicting labels for curve '" + fields[0] +
                                 "'");
    }
  }
  if (by_id.empty()) throw std::runtime_error("dataset file has no data rows");

  Dataset ds;
  double tmin = std::numeric_limits<double>::infinity();
  double tmax = -std::numeric_limits<double>::infinity();
  for (auto& [id, rows] : by_id) {
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.t < b.t; });
    Curve c;
    c.id = id;
    c.timepoints.reserve(rows.size());
    c.values.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].t == rows[i - 1].t)
        throw std::runtime_error("duplicate timepoint " +
                                 format_value(rows[i].t) + " in curve '" + id +
                                 "'");
      c.timepoints.push_back(rows[i].t);
      c.values.push_back(rows[i].y);
      tmin = std::min(tmin, rows[i].t);
      tmax = std::max(tmax, rows[i].t);
    }
    ds.curves.push_back(std::move(c));
  }
  ds.domain = domain ? *domain : Interval{tmin, tmax};
  if (has_label) {
    std::vector<int> lab;
    lab.reserve(ds.curves.size());
    for (const auto& c : ds.curves) lab.push_back(labels.at(c.id));
    ds.true_labels = std::move(lab);
  }
  ds.validate();
  return ds;
}

Dataset read_dataset_file(const std::string& path,
                          std::optional<Interval> domain) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return read_dataset(in, domain);
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  bool has_label = dataset.true_labels.has_value();
  out << "curve_id,t,y" << (has_label ? ",label" : "") << "\n";

  std::vector<int> order(dataset.curves.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return dataset.curves[a].id < dataset.curves[b].id;
  });

  for (int idx : order) {
    const Curve& c = dataset.curves[idx];
    for (std::size_t i = 0; i < c.timepoints.size(); ++i) {
      out << c.id << ',' << format_value(c.timepoints[i]) << ','
          << format_value(c.values[i]);
      if (has_label) out << ',' << (*dataset.true_labels)[idx];
      out << "\n";
    }
  }
}

void write_dataset_file(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_dataset(dataset, out);
  if (!out) throw std::runtime_error("failed writing dataset to: " + path);
}

Dataset rescale_time(const Dataset& dataset, Interval from, Interval to) {
  if (!(from.length() > 0.0) || !(to.length() > 0.0))
    throw std::invalid_argument("rescale intervals must have positive length");
  double scale = to.length() / from.length();
  Dataset out = dataset;
  out.domain = to;
  for (auto& c : out.curves)
    for (auto& t : c.timepoints) t = to.lo + (t - from.lo) * scale;
  return out;
}

}  // namespace funfuse
