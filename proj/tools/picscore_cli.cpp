// picscore command-line front end.
//
//   picscore synth  -o scores.csv [--seed N] [distribution flags]
//   picscore split  scores.csv --out-train train.csv --out-test test.csv
//   picscore train  train.csv -o model.json
//   picscore score  test.csv --model model.json -o scored.csv
//   picscore fuse   test.csv --model model.json --max-refs 5 -o fused.csv
//   picscore eval   scored.csv --estimator pic -o report.csv
//   picscore curve  scored.csv --test-model test_model.json -o curve.csv
//
// Exit status: 0 success, 2 usage or validation error, 1 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "picscore/picscore.hpp"

namespace {

using namespace picscore;
using nlohmann::json;

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::string> estimator;
  std::optional<double> target_fmr;
  std::optional<std::size_t> ece_bins;
  std::optional<std::size_t> curve_bins;
  std::optional<std::uint64_t> seed;
  json parameters = json::object();

  void write() const {
    if (outputs.empty()) return;
    auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    json j = {{"command", command},
              {"argv", argv},
              {"inputs", inputs},
              {"outputs", outputs},
              {"estimator", opt(estimator)},
              {"target_fmr", opt(target_fmr)},
              {"bins", {{"ece", opt(ece_bins)}, {"ccc", opt(curve_bins)}}},
              {"seed", opt(seed)},
              {"parameters", parameters},
              {"tool_version", kVersion}};
    const std::string path = outputs.front() + ".manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  SynthConfig config;
  std::string out;
};

void cmd_synth(const SynthArgs& a, Manifest& m) {
  const auto set = generate(a.config);
  save_scores(a.out, set.records());
  m.outputs = {a.out};
  m.seed = a.config.seed;
  m.parameters = {{"genuine_mean", a.config.genuine_mean},   {"genuine_std", a.config.genuine_std},
                  {"imposter_mean", a.config.imposter_mean}, {"imposter_std", a.config.imposter_std},
                  {"n_genuine", a.config.n_genuine},         {"n_imposter", a.config.n_imposter},
                  {"n_subjects", a.config.n_subjects},       {"refs_per_probe", a.config.refs_per_probe}};
  std::cout << "wrote " << set.genuine_scores().size() << " genuine and " << set.imposter_scores().size()
            << " imposter comparisons to " << a.out << '\n';
}

// --- split ---------------------------------------------------------------

struct SplitArgs {
  std::string in;
  double fraction = 0.5;
  std::uint64_t seed = 0;
  std::string out_train;
  std::string out_test;
};

void cmd_split(const SplitArgs& a, Manifest& m) {
  const auto set = load_scores(a.in);
  const auto split = split_subject_exclusive(set.records(), a.fraction, a.seed);
  save_scores(a.out_train, split.train.records());
  save_scores(a.out_test, split.test.records());
  m.inputs = {a.in};
  m.outputs = {a.out_train, a.out_test};
  m.seed = a.seed;
  m.parameters = {{"train_fraction", a.fraction}, {"dropped", split.dropped}};
  std::cout << "train: " << split.train.genuine_scores().size() << " genuine, "
            << split.train.imposter_scores().size() << " imposter, " << split.train_subjects.size() << " subjects\n"
            << "test:  " << split.test.genuine_scores().size() << " genuine, " << split.test.imposter_scores().size()
            << " imposter, " << split.test_subjects.size() << " subjects\n"
            << "dropped " << split.dropped << " cross-partition comparisons\n";
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string in;
  double prior = 0.5;
  std::size_t resolution = kDefaultGridResolution;
  bool raw_ratio = false;
  std::string out;
};

void cmd_train(const TrainArgs& a, Manifest& m) {
  const auto set = load_scores(a.in);
  const auto model = fit_model(set, a.prior, a.resolution, !a.raw_ratio);
  save_model(model, a.out);
  m.inputs = {a.in};
  m.outputs = {a.out};
  m.parameters = {{"prior_genuine", a.prior}, {"resolution", a.resolution}, {"monotone_log_lr", !a.raw_ratio}};
  std::printf("genuine bandwidth %.6f (%zu scores)\nimposter bandwidth %.6f (%zu scores)\ngrid [%.6f, %.6f] x %zu\n",
              model.genuine.bandwidth(), set.genuine_scores().size(), model.imposter.bandwidth(),
              set.imposter_scores().size(), model.genuine.grid_min(), model.genuine.grid_max(),
              model.genuine.grid_resolution());
}

// --- score ---------------------------------------------------------------

struct ScoreArgs {
  std::string in;
  std::string model;
  double fmr = 1e-3;
  std::string out;
};

void cmd_score(const ScoreArgs& a, Manifest& m) {
  const auto model = load_model(a.model);
  const auto set = load_scores(a.in);
  const double threshold = pic_threshold_for_fmr(a.fmr);
  auto out = open_output(a.out);
  std::vector<std::string> header(std::begin(kScoreColumns), std::end(kScoreColumns));
  header.insert(header.end(), {"pic", "decision", "confidence"});
  csv::write_row(out, header);
  for (const auto& r : set.records()) {
    const auto pic = pic_single(model, r.score);
    const auto d = decision_confidence(pic, threshold);
    auto fields = record_fields(r);
    fields.insert(fields.end(), {csv::fixed6(pic.value), to_string(d.decision), csv::fixed6(d.confidence)});
    csv::write_row(out, fields);
  }
  m.inputs = {a.in, a.model};
  m.outputs = {a.out};
  m.estimator = "pic";
  m.target_fmr = a.fmr;
  m.parameters = {{"pic_threshold", threshold}};
  std::cout << "scored " << set.size() << " comparisons at PIC threshold " << csv::fixed6(threshold) << '\n';
}

// --- fuse ----------------------------------------------------------------

struct FuseArgs {
  std::string in;
  std::string model;
  std::size_t max_refs = 5;
  double fmr = 1e-3;
  std::string out;
};

void cmd_fuse(const FuseArgs& a, Manifest& m) {
  const auto model = load_model(a.model);
  const auto set = load_scores(a.in);
  struct Group {
    std::string probe;
    std::string claimed;
    Label label;
    std::vector<double> scores;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& r = set.records()[i];
    if (!r.probe_id || !r.subject_b) {
      throw ValidationError("row " + std::to_string(i + 1) + ": fusion needs probe_id and subject_b");
    }
    const auto key = std::make_pair(*r.probe_id, *r.subject_b);
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.push_back({key.first, key.second, r.label, {}});
    auto& g = groups[it->second];
    if (g.label != r.label) {
      throw ValidationError("row " + std::to_string(i + 1) + ": mixed labels in group (" + key.first + ", " +
                            key.second + ")");
    }
    if (g.scores.size() < a.max_refs) g.scores.push_back(r.score);
  }

  const double threshold = pic_threshold_for_fmr(a.fmr);
  auto out = open_output(a.out);
  csv::write_row(out, {"probe_id", "claimed_id", "n_used", "pic", "decision", "confidence", "label"});
  for (const auto& g : groups) {
    const auto pic = pic_multi(model, g.scores);
    const auto d = decision_confidence(pic, threshold);
    csv::write_row(out, {g.probe, g.claimed, std::to_string(g.scores.size()), csv::fixed6(pic.value),
                         to_string(d.decision), csv::fixed6(d.confidence), to_string(g.label)});
  }
  m.inputs = {a.in, a.model};
  m.outputs = {a.out};
  m.estimator = "pic";
  m.target_fmr = a.fmr;
  m.parameters = {{"max_refs", a.max_refs}, {"pic_threshold", threshold}};
  std::cout << "fused " << set.size() << " comparisons into " << groups.size() << " groups\n";
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string in;
  std::string estimator = "pic";
  double fmr = 1e-3;
  std::size_t ece_bins = kDefaultEceBins;
  std::string decisions = "all";
  std::string model;
  std::string train;
  std::string out;
  std::string summary;
};

void cmd_eval(const EvalArgs& a, Manifest& m) {
  const auto kind = parse_estimator(a.estimator);
  if (!kind) throw ValidationError("unknown estimator '" + a.estimator + "'");
  const auto table = csv::read_file(a.in);
  if (table.rows.empty()) throw ParseError(0, "no records");
  const bool fused = table.column("claimed_id").has_value();
  const auto label_col = table.require_column("label");

  std::vector<Label> labels;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto l = parse_label(table.rows[i][label_col]);
    if (!l) throw ParseError(i + 1, "unknown label '" + table.rows[i][label_col] + "'");
    labels.push_back(*l);
  }
  // Verification uses the raw score when present, otherwise the PIC value.
  const auto verify_col = fused ? table.require_column("pic") : table.require_column("score");
  std::vector<double> verify_scores;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    verify_scores.push_back(csv::parse_real(table.rows[i][verify_col], i + 1));
  }

  std::vector<double> confidences;
  std::vector<Label> decisions;
  if (*kind == EstimatorKind::pic) {
    const auto conf_col = table.require_column("confidence");
    const auto dec_col = table.require_column("decision");
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      confidences.push_back(csv::parse_real(table.rows[i][conf_col], i + 1, "confidence"));
      auto d = parse_label(table.rows[i][dec_col]);
      if (!d) throw ParseError(i + 1, "unknown decision '" + table.rows[i][dec_col] + "'");
      decisions.push_back(*d);
    }
  } else {
    if (fused) throw ValidationError("baseline estimators need raw scores; fused input has none");
    if (a.train.empty()) throw ValidationError("--train is required for baseline estimators");
    const auto train = load_scores(a.train);
    std::optional<DensityModel> model;
    if (*kind == EstimatorKind::lrc) {
      if (a.model.empty()) throw ValidationError("--model is required for the lrc estimator");
      model = load_model(a.model);
    }
    const double t = threshold_at_fmr(train.imposter_scores(), a.fmr).threshold;
    const auto est =
        fit_baseline(*kind, train.genuine_scores(), train.imposter_scores(), t, model ? &*model : nullptr);
    for (double s : verify_scores) {
      confidences.push_back(baseline_confidence(est, model ? &*model : nullptr, s));
      decisions.push_back(s >= t ? Label::genuine : Label::imposter);
    }
  }

  std::vector<double> conf_sel;
  std::vector<bool> correct;
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    if (a.decisions == "genuine" && decisions[i] != Label::genuine) continue;
    if (a.decisions == "imposter" && decisions[i] != Label::imposter) continue;
    conf_sel.push_back(confidences[i]);
    correct.push_back(decisions[i] == labels[i]);
  }
  if (conf_sel.empty()) throw ValidationError("no samples left after the decision filter");
  const auto report = calibration_report(conf_sel, correct, a.ece_bins);

  std::vector<double> gen, imp;
  for (std::size_t i = 0; i < verify_scores.size(); ++i) {
    (labels[i] == Label::genuine ? gen : imp).push_back(verify_scores[i]);
  }
  std::optional<VerificationResult> ver;
  if (!gen.empty() && !imp.empty()) ver = fnmr_at_fmr(gen, imp, a.fmr);

  {
    auto out = open_output(a.out);
    write_calibration_csv(out, report);
  }
  const std::string summary_path = a.summary.empty() ? a.out + ".summary.csv" : a.summary;
  {
    auto out = open_output(summary_path);
    csv::write_row(out, {"metric", "value"});
    csv::write_row(out, {"estimator", to_string(*kind)});
    csv::write_row(out, {"decisions", a.decisions});
    csv::write_row(out, {"n_samples", std::to_string(report.n_samples)});
    csv::write_row(out, {"n_bins", std::to_string(report.n_bins)});
    csv::write_row(out, {"ece", csv::fixed6(report.ece)});
    csv::write_row(out, {"mce", csv::fixed6(report.mce)});
    csv::write_row(out, {"target_fmr", csv::fixed6(a.fmr)});
    if (ver) {
      csv::write_row(out, {"threshold", csv::fixed6(ver->threshold)});
      csv::write_row(out, {"fmr", csv::fixed6(ver->fmr)});
      csv::write_row(out, {"fnmr", csv::fixed6(ver->fnmr)});
      csv::write_row(out, {"n_genuine", std::to_string(ver->n_genuine)});
      csv::write_row(out, {"n_imposter", std::to_string(ver->n_imposter)});
      csv::write_row(out, {"threshold_reachable", ver->reachable ? "true" : "false"});
    }
  }

  m.inputs = {a.in};
  if (!a.train.empty()) m.inputs.push_back(a.train);
  if (!a.model.empty()) m.inputs.push_back(a.model);
  m.outputs = {a.out, summary_path};
  m.estimator = to_string(*kind);
  m.target_fmr = a.fmr;
  m.ece_bins = a.ece_bins;
  m.parameters = {{"decisions", a.decisions}};

  std::printf("estimator %s, %zu samples, %zu bins\nECE %.6f\nMCE %.6f\n", to_string(*kind), report.n_samples,
              report.n_bins, report.ece, report.mce);
  if (ver) {
    std::printf("FNMR %.6f at FMR %.6f (target %.6f, threshold %.6f%s)\n", ver->fnmr, ver->fmr, a.fmr, ver->threshold,
                ver->reachable ? "" : ", target below 1/n");
  }
}

// --- curve ---------------------------------------------------------------

struct CurveArgs {
  std::string in;
  std::string test_model;
  std::size_t bins = kDefaultCurveBins;
  std::string out;
};

void cmd_curve(const CurveArgs& a, Manifest& m) {
  const auto model = load_model(a.test_model);
  const auto table = csv::read_file(a.in);
  if (table.rows.empty()) throw ParseError(0, "no records");
  const auto score_col = table.require_column("score");
  const auto dec_col = table.require_column("decision");
  const auto conf_col = table.require_column("confidence");
  std::vector<double> truth, pred;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const double s = csv::parse_real(row[score_col], i + 1);
    auto d = parse_label(row[dec_col]);
    if (!d) throw ParseError(i + 1, "unknown decision '" + row[dec_col] + "'");
    truth.push_back(true_confidence(model, s, *d));
    pred.push_back(csv::parse_real(row[conf_col], i + 1, "confidence"));
  }
  const auto curve = ccc(truth, pred, a.bins);
  auto out = open_output(a.out);
  write_curve_csv(out, curve);
  m.inputs = {a.in, a.test_model};
  m.outputs = {a.out};
  m.curve_bins = a.bins;
  std::cout << "wrote " << curve.size() << " calibration curve bins to " << a.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic interpretable comparison scores for biometric verification"};
  app.set_version_flag("--version", std::string(picscore::kVersion));
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic two-Gaussian score set");
  synth_cmd->add_option("--genuine-mean", synth.config.genuine_mean, "Genuine score mean")->capture_default_str();
  synth_cmd->add_option("--genuine-std", synth.config.genuine_std, "Genuine score std")->capture_default_str();
  synth_cmd->add_option("--imposter-mean", synth.config.imposter_mean, "Imposter score mean")->capture_default_str();
  synth_cmd->add_option("--imposter-std", synth.config.imposter_std, "Imposter score std")->capture_default_str();
  synth_cmd->add_option("--n-genuine", synth.config.n_genuine, "Genuine comparisons")->capture_default_str();
  synth_cmd->add_option("--n-imposter", synth.config.n_imposter, "Imposter comparisons")->capture_default_str();
  synth_cmd->add_option("--subjects", synth.config.n_subjects, "Number of identities")->capture_default_str();
  synth_cmd->add_option("--refs-per-probe", synth.config.refs_per_probe, "Comparisons per probe and claimed identity")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.config.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("-o,--out", synth.out, "Output scores CSV")->required();

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Subject-exclusive train/test split");
  split_cmd->add_option("input", split.in, "Scores CSV")->required();
  split_cmd->add_option("--fraction", split.fraction, "Train fraction")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--seed", split.seed, "Tie-break seed")->capture_default_str();
  split_cmd->add_option("--out-train", split.out_train, "Train CSV")->required();
  split_cmd->add_option("--out-test", split.out_test, "Test CSV")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit genuine/imposter densities");
  train_cmd->add_option("input", train.in, "Training scores CSV")->required();
  train_cmd->add_option("--prior", train.prior, "Genuine prior probability")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--resolution", train.resolution, "Lookup grid points")->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 24));
  train_cmd->add_flag("--raw-ratio", train.raw_ratio, "Keep the unregularised KDE likelihood ratio");
  train_cmd->add_option("-o,--out", train.out, "Model JSON")->required();

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Append PIC, decision and confidence columns");
  score_cmd->add_option("input", score.in, "Scores CSV")->required();
  score_cmd->add_option("--model", score.model, "Model JSON")->required();
  score_cmd->add_option("--fmr", score.fmr, "Target false match rate")->capture_default_str();
  score_cmd->add_option("-o,--out", score.out, "Scored CSV")->required();

  FuseArgs fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Joint PIC per (probe, claimed identity) group");
  fuse_cmd->add_option("input", fuse.in, "Scores CSV")->required();
  fuse_cmd->add_option("--model", fuse.model, "Model JSON")->required();
  fuse_cmd->add_option("--max-refs", fuse.max_refs, "References fused per group")->capture_default_str()
      ->check(CLI::IsMember({std::size_t{1}, std::size_t{2}, std::size_t{5}}));
  fuse_cmd->add_option("--fmr", fuse.fmr, "Target false match rate")->capture_default_str();
  fuse_cmd->add_option("-o,--out", fuse.out, "Fused CSV")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Calibration (ECE/MCE) and FNMR at fixed FMR");
  eval_cmd->add_option("input", eval.in, "Scored or fused CSV")->required();
  eval_cmd->add_option("--estimator", eval.estimator, "Confidence estimator")->capture_default_str()
      ->check(CLI::IsMember({"pic", "dtc", "lrc", "erbc"}));
  eval_cmd->add_option("--fmr", eval.fmr, "Target false match rate")->capture_default_str();
  eval_cmd->add_option("--ece-bins", eval.ece_bins, "ECE/MCE bins")->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--decisions", eval.decisions, "Decisions pooled into the calibration metrics")
      ->capture_default_str()->check(CLI::IsMember({"all", "genuine", "imposter"}));
  eval_cmd->add_option("--model", eval.model, "Model JSON (lrc)");
  eval_cmd->add_option("--train", eval.train, "Training scores CSV (baselines)");
  eval_cmd->add_option("-o,--out", eval.out, "Per-bin report CSV")->required();
  eval_cmd->add_option("--summary", eval.summary, "Summary CSV (default: <out>.summary.csv)");

  CurveArgs curve;
  auto* curve_cmd = app.add_subcommand("curve", "Confidence calibration curve");
  curve_cmd->add_option("input", curve.in, "Scored CSV")->required();
  curve_cmd->add_option("--test-model", curve.test_model, "Model fitted on the test set")->required();
  curve_cmd->add_option("--bins", curve.bins, "Curve bins")->capture_default_str()->check(CLI::PositiveNumber);
  curve_cmd->add_option("-o,--out", curve.out, "Curve CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Manifest manifest;
  manifest.argv.assign(argv + 1, argv + argc);
  try {
    if (*synth_cmd) {
      manifest.command = "synth";
      cmd_synth(synth, manifest);
    } else if (*split_cmd) {
      manifest.command = "split";
      cmd_split(split, manifest);
    } else if (*train_cmd) {
      manifest.command = "train";
      cmd_train(train, manifest);
    } else if (*score_cmd) {
      manifest.command = "score";
      cmd_score(score, manifest);
    } else if (*fuse_cmd) {
      manifest.command = "fuse";
      cmd_fuse(fuse, manifest);
    } else if (*eval_cmd) {
      manifest.command = "eval";
      cmd_eval(eval, manifest);
    } else if (*curve_cmd) {
      manifest.command = "curve";
      cmd_curve(curve, manifest);
    }
    manifest.write();
  } catch (const picscore::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const picscore::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
