#pragma once

#include <map>
#include <string>
#include <vector>

#include "rlvr/grpo.hpp"
#include "rlvr/metrics.hpp"

namespace rlvr::report {

// Trace CSV: first row is the schema tag, second row the column header,
// then one row per step. Doubles are printed with %.17g so that
// read_trace_csv(write_trace_csv(x)) == x bitwise.
void write_trace_csv(const std::vector<grpo::StepReport>& steps,
                     const std::string& path);
std::vector<grpo::StepReport> read_trace_csv(const std::string& path);

// Same data as JSON ({"schema": ..., "steps": [...]}).
void write_trace_json(const std::vector<grpo::StepReport>& steps,
                      const std::string& path);
std::vector<grpo::StepReport> read_trace_json(const std::string& path);

// Per-problem pass rates, one row per (step, problem id) pair.
void write_pass_rate_csv(const std::vector<grpo::StepReport>& steps,
                         const std::string& path);

// Eval results: schema row, header, then one row per problem with a
// column per requested k.
void write_eval_csv(const std::vector<metrics::EvalResult>& results,
                    const std::string& path);
void write_eval_json(const std::vector<metrics::EvalResult>& results,
                     const std::string& path);
std::vector<metrics::EvalResult> read_eval_json(const std::string& path);

struct Series {
  std::string label;
  std::vector<double> values;  // y at x = 0, 1, 2, ...
};

// Minimal hand-rolled SVG line chart: one polyline per series plus axis
// lines, labels, and a legend. Well-formed XML, no external references.
void write_line_chart_svg(const std::vector<Series>& series,
                          const std::string& title,
                          const std::string& y_label, const std::string& path);

// Convenience wrappers for the three standard charts.
void write_entropy_chart(const std::vector<grpo::StepReport>& steps,
                         const std::string& path);
void write_cluster_chart(const std::vector<metrics::ClusterTrace>& traces,
                         const std::string& path);

}  // namespace rlvr::report
