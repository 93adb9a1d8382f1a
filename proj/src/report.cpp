#include "rlvr/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rlvr/errors.hpp"

namespace rlvr::report {

namespace {

constexpr const char* kTraceSchema = "trace-csv-v1";
constexpr const char* kPassRateSchema = "pass-rate-csv-v1";
constexpr const char* kEvalSchema = "eval-csv-v1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_trace_csv(const std::vector<grpo::StepReport>& steps,
                     const std::string& path) {
  auto out = open_out(path);
  out << kTraceSchema << '\n';
  out << "step,stage,phase,mean_reward,mean_entropy,truncation_rate,loss,kl\n";
  for (const auto& s : steps) {
    out << s.step << ',' << s.stage << ',' << s.phase << ','
        << fmt(s.mean_reward) << ',' << fmt(s.mean_entropy) << ','
        << fmt(s.truncation_rate) << ',' << fmt(s.loss) << ',' << fmt(s.kl)
        << '\n';
  }
}

std::vector<grpo::StepReport> read_trace_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kTraceSchema) {
    throw IoError("unrecognized trace schema in " + path);
  }
  std::getline(in, line);  // column header
  std::vector<grpo::StepReport> steps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 8) throw IoError("malformed trace row in " + path);
    grpo::StepReport s;
    s.step = std::stoi(fields[0]);
    s.stage = std::stoi(fields[1]);
    s.phase = std::stoi(fields[2]);
    s.mean_reward = std::stod(fields[3]);
    s.mean_entropy = std::stod(fields[4]);
    s.truncation_rate = std::stod(fields[5]);
    s.loss = std::stod(fields[6]);
    s.kl = std::stod(fields[7]);
    steps.push_back(std::move(s));
  }
  return steps;
}

void write_trace_json(const std::vector<grpo::StepReport>& steps,
                      const std::string& path) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& s : steps) {
    nlohmann::ordered_json pass_rates = nlohmann::ordered_json::array();
    for (const auto& [id, rate] : s.pass_rates) {
      pass_rates.push_back({{"id", id}, {"pass_rate", rate}});
    }
    rows.push_back({
        {"step", s.step},
        {"stage", s.stage},
        {"phase", s.phase},
        {"mean_reward", s.mean_reward},
        {"mean_entropy", s.mean_entropy},
        {"truncation_rate", s.truncation_rate},
        {"loss", s.loss},
        {"kl", s.kl},
        {"pass_rates", pass_rates},
    });
  }
  auto out = open_out(path);
  out << nlohmann::ordered_json{{"schema", "trace-json-v1"}, {"steps", rows}}
             .dump(2)
      << '\n';
}

std::vector<grpo::StepReport> read_trace_json(const std::string& path) {
  auto in = open_in(path);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
  if (j.at("schema") != "trace-json-v1") {
    throw IoError("unrecognized trace schema in " + path);
  }
  std::vector<grpo::StepReport> steps;
  for (const auto& row : j.at("steps")) {
    grpo::StepReport s;
    s.step = row.at("step");
    s.stage = row.at("stage");
    s.phase = row.at("phase");
    s.mean_reward = row.at("mean_reward");
    s.mean_entropy = row.at("mean_entropy");
    s.truncation_rate = row.at("truncation_rate");
    s.loss = row.at("loss");
    s.kl = row.at("kl");
    for (const auto& pr : row.at("pass_rates")) {
      s.pass_rates.emplace_back(pr.at("id"), pr.at("pass_rate"));
    }
    steps.push_back(std::move(s));
  }
  return steps;
}

void write_pass_rate_csv(const std::vector<grpo::StepReport>& steps,
                         const std::string& path) {
  auto out = open_out(path);
  out << kPassRateSchema << '\n';
  out << "step,stage,phase,problem_id,pass_rate\n";
  for (const auto& s : steps) {
    for (const auto& [id, rate] : s.pass_rates) {
      out << s.step << ',' << s.stage << ',' << s.phase << ',' << id << ','
          << fmt(rate) << '\n';
    }
  }
}

void write_eval_csv(const std::vector<metrics::EvalResult>& results,
                    const std::string& path) {
  std::set<int> ks;
  for (const auto& r : results) {
    for (const auto& [k, v] : r.pass_at_k) ks.insert(k);
  }
  auto out = open_out(path);
  out << kEvalSchema << '\n';
  out << "problem_id,n,c,avg_at_1";
  for (int k : ks) out << ",pass_at_" << k;
  out << '\n';
  for (const auto& r : results) {
    out << r.id << ',' << r.n << ',' << r.c << ',' << fmt(r.avg_at_1);
    for (int k : ks) {
      auto it = r.pass_at_k.find(k);
      out << ',' << (it == r.pass_at_k.end() ? "" : fmt(it->second));
    }
    out << '\n';
  }
}

void write_eval_json(const std::vector<metrics::EvalResult>& results,
                     const std::string& path) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  double avg_sum = 0.0;
  std::map<int, double> k_sums;
  for (const auto& r : results) {
    nlohmann::ordered_json pk = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.pass_at_k) {
      pk[std::to_string(k)] = v;
      k_sums[k] += v;
    }
    avg_sum += r.avg_at_1;
    rows.push_back({
        {"problem_id", r.id},
        {"n", r.n},
        {"c", r.c},
        {"avg_at_1", r.avg_at_1},
        {"pass_at_k", pk},
    });
  }
  nlohmann::ordered_json aggregate = nlohmann::ordered_json::object();
  if (!results.empty()) {
    aggregate["avg_at_1"] = avg_sum / static_cast<double>(results.size());
    for (const auto& [k, sum] : k_sums) {
      aggregate["pass_at_" + std::to_string(k)] =
          sum / static_cast<double>(results.size());
    }
  }
  auto out = open_out(path);
  out << nlohmann::ordered_json{{"schema", "eval-json-v1"},
                                {"aggregate", aggregate},
                                {"results", rows}}
             .dump(2)
      << '\n';
}

std::vector<metrics::EvalResult> read_eval_json(const std::string& path) {
  auto in = open_in(path);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
  if (j.at("schema") != "eval-json-v1") {
    throw IoError("unrecognized eval schema in " + path);
  }
  std::vector<metrics::EvalResult> results;
  for (const auto& row : j.at("results")) {
    metrics::EvalResult r;
    r.id = row.at("problem_id");
    r.n = row.at("n");
    r.c = row.at("c");
    r.avg_at_1 = row.at("avg_at_1");
    for (auto& [key, value] : row.at("pass_at_k").items()) {
      r.pass_at_k[std::stoi(key)] = value;
    }
    results.push_back(std::move(r));
  }
  return results;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_line_chart_svg(const std::vector<Series>& series,
                          const std::string& title,
                          const std::string& y_label,
                          const std::string& path) {
  const int width = 720, height = 420;
  const int ml = 60, mr = 160, mt = 40, mb = 40;
  const double px = ml, py = mt;
  const double pw = width - ml - mr, ph = height - mt - mb;

  std::size_t max_len = 1;
  double y_min = 0.0, y_max = 1.0;
  bool have_values = false;
  for (const auto& s : series) {
    max_len = std::max(max_len, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      if (!have_values) {
        y_min = y_max = v;
        have_values = true;
      } else {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
      }
    }
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }

  auto x_of = [&](std::size_t i) {
    return max_len <= 1 ? px + pw / 2
                        : px + pw * static_cast<double>(i) /
                                   static_cast<double>(max_len - 1);
  };
  auto y_of = [&](double v) { return py + ph * (1.0 - (v - y_min) / (y_max - y_min)); };

  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                   "#d62728", "#9467bd", "#8c564b"};
  const int palette_size = 6;

  auto out = open_out(path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  out << "  <rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "  <text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title)
      << "</text>\n";
  // Axes.
  out << "  <line x1=\"" << px << "\" y1=\"" << py + ph << "\" x2=\""
      << px + pw << "\" y2=\"" << py + ph << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << px << "\" y1=\"" << py << "\" x2=\"" << px
      << "\" y2=\"" << py + ph << "\" stroke=\"black\"/>\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", y_max);
  out << "  <text x=\"" << px - 6 << "\" y=\"" << py + 5
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", y_min);
  out << "  <text x=\"" << px - 6 << "\" y=\"" << py + ph
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << buf << "</text>\n";
  out << "  <text x=\"16\" y=\"" << py + ph / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << py + ph / 2 << ")\" text-anchor=\"middle\">" << xml_escape(y_label)
      << "</text>\n";
  out << "  <text x=\"" << px + pw / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">step</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % palette_size];
    if (series[s].values.size() >= 2) {
      out << "  <polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < series[s].values.size(); ++i) {
        if (i) out << ' ';
        std::snprintf(buf, sizeof buf, "%.2f,%.2f", x_of(i),
                      y_of(series[s].values[i]));
        out << buf;
      }
      out << "\"/>\n";
    } else if (series[s].values.size() == 1) {
      out << "  <circle cx=\"" << x_of(0) << "\" cy=\""
          << y_of(series[s].values[0]) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    double ly = py + 14.0 * static_cast<double>(s);
    out << "  <rect x=\"" << px + pw + 12 << "\" y=\"" << ly
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    out << "  <text x=\"" << px + pw + 26 << "\" y=\"" << ly + 9
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << xml_escape(series[s].label) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_entropy_chart(const std::vector<grpo::StepReport>& steps,
                         const std::string& path) {
  Series s;
  s.label = "mean policy entropy";
  for (const auto& step : steps) s.values.push_back(step.mean_entropy);
  write_line_chart_svg({s}, "Policy entropy over training", "entropy (nats)",
                       path);
}

void write_cluster_chart(const std::vector<metrics::ClusterTrace>& traces,
                         const std::string& path) {
  std::vector<Series> series;
  for (const auto& t : traces) {
    if (t.series.empty()) continue;
    Series s;
    s.label = t.label + " (n=" + std::to_string(t.member_count) + ")";
    s.values = t.series;
    series.push_back(std::move(s));
  }
  write_line_chart_svg(series, "Pass rate by initial-accuracy cluster",
                       "mean pass rate", path);
}

}  // namespace rlvr::report
