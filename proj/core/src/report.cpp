#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pcgnet/error.hpp"
#include "pcgnet/report.hpp"

namespace pcgnet::report {

using nlohmann::json;
namespace fs = std::filesystem;

std::string epoch_csv(const train::TrainReport& report) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "epoch,train_loss,val_f1,val_acc,val_sens,val_spec,tau\n";
  for (const auto& r : report.epochs)
    os << r.epoch << ',' << r.train_loss << ',' << r.val.f1 << ',' << r.val.accuracy << ',' << r.val.sensitivity
       << ',' << r.val.specificity << ',' << r.tau << '\n';
  return os.str();
}

namespace {

json counts_json(const train::ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

json metrics_json(const train::Metrics& m) {
  return {{"f1", m.f1},
          {"accuracy", m.accuracy},
          {"sensitivity", m.sensitivity},
          {"specificity", m.specificity},
          {"precision", m.precision}};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string eval_json(const train::EvalReport& eval) {
  json clip = metrics_json(eval.clip);
  clip["counts"] = counts_json(eval.clip_counts);
  clip["n"] = eval.n_clips;
  json rec = metrics_json(eval.recording);
  rec["counts"] = counts_json(eval.recording_counts);
  rec["n"] = eval.n_recordings;
  json j = metrics_json(eval.clip);
  j["tau"] = eval.tau;
  j["clip"] = clip;
  j["recording"] = rec;
  return j.dump(2);
}

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << std::setprecision(3) << xv << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << yv
       << "</text>\n";
  }
  os << std::setprecision(2);
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << escape(x_label) << "</text>\n";
  os << "<text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << H / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = colors[i % 4];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) os << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (i + 1) << "\" text-anchor=\"end\" font-size=\"12\" fill=\""
       << color << "\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot write " + path.string());
  os << text;
  if (!os) throw InputError("write failed for " + path.string());
}

void write_training_outputs(const fs::path& dir, const train::TrainReport& report) {
  fs::create_directories(dir);
  write_text(dir / "training_report.csv", epoch_csv(report));

  Series loss{"train loss", {}, {}}, acc{"val accuracy", {}, {}}, f1{"val F1", {}, {}};
  std::ostringstream loss_csv, acc_csv;
  loss_csv << std::setprecision(10) << "epoch,train_loss\n";
  acc_csv << std::setprecision(10) << "epoch,val_acc,val_f1\n";
  for (const auto& r : report.epochs) {
    const auto e = static_cast<double>(r.epoch);
    loss.x.push_back(e), loss.y.push_back(r.train_loss);
    acc.x.push_back(e), acc.y.push_back(r.val.accuracy);
    f1.x.push_back(e), f1.y.push_back(r.val.f1);
    loss_csv << r.epoch << ',' << r.train_loss << '\n';
    acc_csv << r.epoch << ',' << r.val.accuracy << ',' << r.val.f1 << '\n';
  }
  write_text(dir / "loss_curve.csv", loss_csv.str());
  write_text(dir / "accuracy_curve.csv", acc_csv.str());
  write_text(dir / "loss_curve.svg", svg_line_plot("Training loss", "epoch", "loss", {loss}));
  write_text(dir / "accuracy_curve.svg", svg_line_plot("Validation accuracy", "epoch", "metric", {acc, f1}));
}

}  // namespace pcgnet::report
