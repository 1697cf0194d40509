#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcgnet/autodiff.hpp"
#include "pcgnet/error.hpp"

namespace pcgnet::ad {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " max_rel_error=" << max_rel_error;
  for (const auto& e : entries) {
    os << "\n  " << (e.pass ? "ok  " : "BAD ") << e.name << " rel=" << e.max_rel_error
       << " abs=" << e.max_abs_error << " at[" << e.worst_index << "] analytic=" << e.analytic
       << " numeric=" << e.numeric;
  }
  return os.str();
}

GradCheckReport finite_diff_check(const LossBuilder& build, std::span<Parameter* const> params,
                                  double tolerance, double h) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
  }

  auto evaluate = [&build] {
    Tape tape(false);
    return build(tape).item();
  };

  GradCheckReport report;
  for (Parameter* p : params) {
    GradCheckEntry entry;
    entry.name = p->name;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = evaluate();
      p->value[i] = saved - h;
      const double down = evaluate();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad.empty() ? 0.0 : p->grad[i];
      const double rel = relative_error(analytic, numeric);
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(analytic - numeric));
      if (i == 0 || rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.analytic = analytic;
        entry.numeric = numeric;
      }
    }
    entry.pass = entry.max_rel_error <= tolerance;
    report.pass = report.pass && entry.pass;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const auto& a, const auto& b) { return a.max_rel_error > b.max_rel_error; });
  return report;
}

}  // namespace pcgnet::ad
