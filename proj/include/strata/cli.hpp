#pragma once

#include "strata/config.hpp"
#include "strata/metrics.hpp"
#include "strata/train.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace strata {

/// Entry point of the `strata` tool. Exit codes: 0 ok, 1 runtime error, 2 usage error.
int cli_dispatch(int argc, char** argv);
int cli_dispatch(const std::vector<std::string>& args);  // args[0] is the program name

// Pipeline steps behind the subcommands. Each writes <out>/run_manifest.txt.
//
// synth:    <out>/{train,test}/<id>.txt (annotated), <out>/reference/<id>.txt, <out>/scenes/<id>.json
// prepare:  <out>/<id>_<layer>_truth.asc, <out>/<id>.mixture and, with `reference`,
//           <out>/<id>_labels.txt plus reference rasters <out>/<id>_<layer>_{occ,hmin,hmax}.asc
// train:    train_log.jsonl, checkpoint_eNNN.bin, checkpoint.bin
// infer:    <out>/<id>_labels.txt, rasters and meshes
// baseline: <out>/models/, <out>/{logistic,forest}/ rasters of the test plots
// ablate:   one pipeline per value under <out>/<param>_<value>/, ablation.jsonl
void run_synth(const RunConfig& cfg);
void run_prepare(const RunConfig& cfg);
FitResult run_train(const RunConfig& cfg);
void run_infer(const RunConfig& cfg);

struct EvalResult {
  std::optional<Report3d> r3;  // absent when either side lacks per-point labels
  Report2d r2;
  HeightReport heights;
  int plots = 0;
};
EvalResult run_eval(const RunConfig& cfg, std::ostream& out);
void run_baseline(const RunConfig& cfg, std::ostream& out);
std::vector<EvalResult> run_ablate(const RunConfig& cfg, std::ostream& out);

/// Point files (.txt, .xyz, .pts, .las) of a directory in name order.
std::vector<std::filesystem::path> list_point_files(const std::filesystem::path& dir);

/// One class id per line, -1 for unlabeled.
void write_labels(const std::vector<Label>& labels, const std::filesystem::path& path);
std::vector<Label> read_labels(const std::filesystem::path& path);

}  // namespace strata
