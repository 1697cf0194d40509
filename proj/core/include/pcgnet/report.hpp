#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pcgnet/trainer.hpp"

namespace pcgnet::report {

/// epoch,train_loss,val_f1,val_acc,val_sens,val_spec,tau
std::string epoch_csv(const train::TrainReport& report);

std::string eval_json(const train::EvalReport& eval);

struct Series {
  std::string name;
  std::vector<double> x, y;
};

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series);

/// Writes training_report.csv, loss_curve.{svg,csv} and accuracy_curve.{svg,csv}.
void write_training_outputs(const std::filesystem::path& dir, const train::TrainReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pcgnet::report
