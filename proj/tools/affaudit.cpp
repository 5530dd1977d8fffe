#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "affaudit/compliance.hpp"
#include "affaudit/crawl_model.hpp"
#include "affaudit/disclosure.hpp"
#include "affaudit/features.hpp"
#include "affaudit/fixtures.hpp"
#include "affaudit/forest.hpp"
#include "affaudit/interaction_graph.hpp"
#include "affaudit/pattern_labeler.hpp"
#include "affaudit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace affaudit;

namespace {

// Exit codes: CLI11 owns usage errors; 2 is a failed stage.
constexpr int kStageFailure = 2;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

Corpus load_corpus(const std::string& path, bool strict) {
  IngestOptions opt;
  opt.strict = strict;
  auto result = ingest_corpus(path, opt);
  for (const auto& v : result.violations) std::cerr << "warning: " << describe(v) << '\n';
  return std::move(result.corpus);
}

PatternRegistry registry_from(const std::string& path) {
  return path.empty() ? default_registry() : load_registry(path);
}

struct Options {
  std::string input, out, out_dir, registry, config, model, labels, truth;
  std::string features, grid, classifier = "rules", verdicts, records, group_by;
  std::string split_on = "guidance", metric = "CC", group_a, group_b, strata, period = "Post2018";
  std::string dump_dir, features_out, cv_out;
  std::uint64_t seed = 1;
  std::size_t n_boot = 10000, quota = 0;
  bool strict = false, table = false;
};

int cmd_ingest(const Options& o) {
  IngestOptions opt;
  opt.strict = o.strict;
  const auto result = ingest_corpus(o.input, opt);
  for (const auto& v : result.violations) std::cout << describe(v) << '\n';
  std::cout << "videos " << result.corpus.videos().size() << ", crawls "
            << result.corpus.crawls().size() << ", violations " << result.violations.size() << '\n';
  return 0;
}

int cmd_label(const Options& o) {
  const auto corpus = load_corpus(o.input, true);
  const auto labels = label_corpus(corpus, registry_from(o.registry));
  std::string out;
  for (const auto& c : corpus.crawls()) {
    const auto& l = labels.by_link.at(c.link_id);
    nlohmann::ordered_json j;
    j["link_id"] = c.link_id;
    j["label"] = to_string(l.label);
    j["rule_id"] = l.rule_id;
    if (!l.diagnostic.empty()) j["diagnostic"] = l.diagnostic;
    out += j.dump() + "\n";
  }
  spill(o.out, out);
  std::fprintf(stderr, "known affiliate %zu, known non-affiliate %zu, unknown %zu, coverage %.4f\n",
               labels.known_affiliate, labels.known_non_affiliate, labels.unknown, labels.coverage());
  return 0;
}

int cmd_graph(const Options& o) {
  const auto corpus = load_corpus(o.input, true);
  if (!o.dump_dir.empty()) {
    fs::create_directories(o.dump_dir);
    for (const auto& c : corpus.crawls()) {
      const auto g = build_graph(c);
      spill((fs::path(o.dump_dir) / (c.link_id + ".json")).string(), graph_to_json(g));
    }
  }
  if (!o.features_out.empty()) spill(o.features_out, features_csv(corpus_features(corpus)));
  return 0;
}

int cmd_train(const Options& o) {
  const auto features = parse_features_csv(slurp(o.features));
  const auto labels = load_link_labels(o.labels);
  std::vector<LabeledFeatures> samples;
  for (const auto& fv : features) {
    if (const auto it = labels.find(fv.link_id); it != labels.end()) samples.push_back({fv, it->second});
  }
  const GridSpec grid = o.grid.empty() ? GridSpec{} : parse_grid(slurp(o.grid));
  const auto result = train_forest(samples, grid, o.seed);
  spill(o.out, serialize_model(result.model));
  if (!o.cv_out.empty()) spill(o.cv_out, cv_report_json(result.cv));
  const auto& best = result.cv.configs[result.cv.best];
  std::fprintf(stderr, "trained on %zu labeled links; best n_trees=%d max_depth=%d min_samples_leaf=%d mean F1 %.4f\n",
               samples.size(), best.config.n_trees, best.config.max_depth,
               best.config.min_samples_leaf, best.mean_f1);
  return 0;
}

int cmd_classify(const Options& o) {
  const auto corpus = load_corpus(o.input, true);
  const auto registry = registry_from(o.registry);
  const auto model = load_model(o.model);
  const auto verdicts = classify_links(corpus, label_corpus(corpus, registry),
                                       corpus_features(corpus), &model, registry);
  spill(o.out, verdicts_jsonl(verdicts));
  return 0;
}

int cmd_disclose(const Options& o) {
  const auto corpus = load_corpus(o.input, true);
  std::vector<LinkVerdict> verdicts;
  if (!o.verdicts.empty()) {
    verdicts = parse_verdicts_jsonl(slurp(o.verdicts));
  } else {
    // Without classifier output only phase-1 verdicts are available.
    const auto registry = registry_from(o.registry);
    const auto labels = label_corpus(corpus, registry);
    for (const auto& c : corpus.crawls()) {
      LinkVerdict v;
      v.link_id = c.link_id;
      v.video_id = c.video_id;
      const auto& l = labels.by_link.at(c.link_id);
      v.kind = l.label == Phase1Label::KnownAffiliate ? VerdictKind::KnownAffiliate
                                                      : VerdictKind::KnownNonAffiliate;
      v.rule_id = l.rule_id;
      verdicts.push_back(std::move(v));
    }
  }
  auto classifier = make_classifier(o.classifier);
  const auto results = analyze_disclosures(corpus, verdicts, *classifier);
  spill(o.out, disclosures_jsonl(results));
  if (!o.records.empty()) {
    std::ostringstream rec;
    write_records(rec, build_records(corpus, verdicts, results, default_partners()));
    spill(o.records, rec.str());
  }
  return 0;
}

int cmd_report(const Options& o) {
  const auto records = load_records(o.records);
  const auto dims = parse_group_dimensions(o.group_by);
  std::vector<MetricReport> reports;
  if (!records.empty()) reports = compute_metrics(records, dims);
  spill(o.out, o.table ? metrics_table(reports, dims) : metrics_csv(reports, dims));
  return 0;
}

int cmd_effect(const Options& o) {
  const auto records = load_records(o.records);
  const auto split = parse_group_dimension(o.split_on);
  if (!split) throw std::runtime_error("unknown --split-on '" + o.split_on + "'");
  EffectPlan plan = default_effect_plan(*split);
  const auto list = [](const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) out.push_back(item);
    }
    return out;
  };
  if (!o.group_a.empty()) plan.group_a = list(o.group_a);
  if (!o.group_b.empty()) plan.group_b = list(o.group_b);
  plan.metrics.clear();
  for (const auto& m : list(o.metric)) {
    const auto s = parse_compliance_status(m);
    if (!s) throw std::runtime_error("unknown --metric '" + m + "'");
    plan.metrics.push_back(*s);
  }
  plan.strata = parse_group_dimensions(o.strata);
  plan.quota = o.quota;
  plan.n_boot = o.n_boot;
  if (o.period == "any") {
    plan.period.reset();
  } else {
    plan.period = parse_period(o.period);
    if (!plan.period) throw std::runtime_error("unknown --period '" + o.period + "'");
  }
  spill(o.out, run_effect(records, plan, o.seed) + "\n");
  return 0;
}

int cmd_gen(const Options& o, bool seed_given) {
  GeneratorSpec spec = o.config.empty() ? default_generator_spec() : load_generator_spec(o.config);
  if (seed_given) spec.seed = o.seed;
  const auto g = generate_corpus(spec);
  const auto bad = validate_truth(g);
  if (!bad.empty()) throw std::runtime_error("truth validator rejected link " + bad.front());
  const Corpus corpus(g.videos, g.crawls);
  std::ostringstream c, t;
  write_corpus(corpus, c);
  write_truth(t, g);
  const fs::path dir(o.out_dir);
  spill((dir / "corpus.jsonl").string(), c.str());
  spill((dir / "truth" / "truth.jsonl").string(), t.str());
  std::size_t aff = 0;
  for (const auto& l : g.links) aff += l.affiliate ? 1 : 0;
  std::fprintf(stderr, "%zu videos, %zu links (%zu affiliate) -> %s\n", g.videos.size(),
               g.links.size(), aff, dir.string().c_str());
  return 0;
}

int cmd_run(const Options& o, bool seed_given) {
  PipelineConfig config = o.config.empty() ? default_pipeline_config() : load_pipeline_config(o.config);
  if (seed_given) config.seed = o.seed;
  PipelineInputs in;
  in.corpus_path = o.input;
  in.out_dir = o.out_dir;
  if (!o.config.empty()) in.config_path = o.config;
  if (!o.registry.empty()) in.registry_path = o.registry;
  if (!o.model.empty()) in.model_path = o.model;
  if (!o.labels.empty()) in.labels_path = o.labels;
  if (!o.truth.empty()) in.truth_path = o.truth;
  const auto s = run_pipeline(in, config);
  std::fprintf(stderr, "%zu videos, %zu links, %zu records; manifest sha256 %s\n", s.videos,
               s.links, s.records, s.manifest_sha256.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affiliate marketing disclosure audit"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Validate a crawl log");
  ingest->add_option("--input", o.input, "Crawl log (JSONL)")->required();
  ingest->add_flag("--strict", o.strict, "Fail on the first violation");

  auto* label = app.add_subcommand("label", "Phase-1 URL pattern labels");
  label->add_option("--input", o.input, "Crawl log")->required();
  label->add_option("--registry", o.registry, "Pattern registry (default: bundled)");
  label->add_option("--out", o.out, "Labels JSONL")->required();

  auto* graph = app.add_subcommand("graph", "Interaction graphs and features");
  graph->add_option("--input", o.input, "Crawl log")->required();
  graph->add_option("--dump-dir", o.dump_dir, "Write one graph JSON per link");
  graph->add_option("--features-out", o.features_out, "Write the feature CSV");

  auto* train = app.add_subcommand("train", "Grid-searched random forest");
  train->add_option("--features", o.features, "Feature CSV")->required();
  train->add_option("--labels", o.labels, "JSONL with link labels")->required();
  train->add_option("--grid", o.grid, "Grid JSON (default grid when omitted)");
  train->add_option("--seed", o.seed, "Training seed");
  train->add_option("--out", o.out, "Model file")->required();
  train->add_option("--cv-out", o.cv_out, "Cross-validation report");

  auto* classify = app.add_subcommand("classify", "Link verdicts");
  classify->add_option("--model", o.model, "Model file")->required();
  classify->add_option("--input", o.input, "Crawl log")->required();
  classify->add_option("--registry", o.registry, "Pattern registry (default: bundled)");
  classify->add_option("--out", o.out, "Verdicts JSONL")->required();

  auto* disclose = app.add_subcommand("disclose", "Disclosure segments per video");
  disclose->add_option("--input", o.input, "Crawl log")->required();
  disclose->add_option("--classifier", o.classifier, "rules | keywords | external:<cmd>");
  disclose->add_option("--verdicts", o.verdicts, "Link verdicts (default: phase-1 labels)");
  disclose->add_option("--registry", o.registry, "Pattern registry (default: bundled)");
  disclose->add_option("--records", o.records, "Also write compliance records here");
  disclose->add_option("--out", o.out, "Segments JSONL")->required();

  auto* report = app.add_subcommand("report", "Grouped compliance metrics");
  report->add_option("--records", o.records, "Compliance records JSONL")->required();
  report->add_option("--group-by", o.group_by, "Comma-separated dimensions");
  report->add_flag("--table", o.table, "Aligned text table instead of CSV");
  report->add_option("--out", o.out, "Output file, - for stdout")->required();

  auto* effect = app.add_subcommand("effect", "Bootstrap effect estimate");
  effect->add_option("--records", o.records, "Compliance records JSONL")->required();
  effect->add_option("--split-on", o.split_on, "Dimension that defines the two groups");
  effect->add_option("--group-a", o.group_a, "Comma-separated values for group A");
  effect->add_option("--group-b", o.group_b, "Comma-separated values for group B");
  effect->add_option("--metric", o.metric, "CC, PC, NC or a comma-separated list");
  effect->add_option("--strata", o.strata, "Comma-separated stratification dimensions");
  effect->add_option("--quota", o.quota, "Records per stratum (0: smallest stratum)");
  effect->add_option("--period", o.period, "Pre2018, Post2018 or any");
  effect->add_option("--n-boot", o.n_boot, "Bootstrap iterations");
  effect->add_option("--seed", o.seed, "Seed");
  effect->add_option("--out", o.out, "Output JSON, - for stdout")->required();

  auto* gen = app.add_subcommand("gen", "Synthetic corpus with a truth file");
  gen->add_option("--config", o.config, "Generator spec JSON (default: bundled)");
  auto* gen_seed = gen->add_option("--seed", o.seed, "Override the generator seed");
  gen->add_option("--out-dir", o.out_dir, "Writes corpus.jsonl and truth/truth.jsonl")->required();

  auto* run = app.add_subcommand("run", "Full pipeline into one run directory");
  run->add_option("--input", o.input, "Crawl log")->required();
  run->add_option("--config", o.config, "Pipeline config JSON");
  auto* run_seed = run->add_option("--seed", o.seed, "Override the config seed");
  run->add_option("--out-dir", o.out_dir, "Run directory")->required();
  run->add_option("--registry", o.registry, "Pattern registry (default: bundled)");
  run->add_option("--model", o.model, "Use this model instead of training");
  run->add_option("--labels", o.labels, "Training labels JSONL");
  run->add_option("--truth", o.truth, "Truth file for end-to-end scoring");

  CLI11_PARSE(app, argc, argv);

  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "ingest") return cmd_ingest(o);
    if (name == "label") return cmd_label(o);
    if (name == "graph") return cmd_graph(o);
    if (name == "train") return cmd_train(o);
    if (name == "classify") return cmd_classify(o);
    if (name == "disclose") return cmd_disclose(o);
    if (name == "report") return cmd_report(o);
    if (name == "effect") return cmd_effect(o);
    if (name == "gen") return cmd_gen(o, gen_seed->count() > 0);
    if (name == "run") return cmd_run(o, run_seed->count() > 0);
  } catch (const PipelineError& e) {
    std::cerr << "affaudit: " << e.what() << '\n';
    return kStageFailure;
  } catch (const IngestError& e) {
    std::cerr << "affaudit: [ingest] " << e.what() << '\n';
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "affaudit: [" << name << "] " << e.what() << '\n';
    return kStageFailure;
  }
  return kStageFailure;
}
