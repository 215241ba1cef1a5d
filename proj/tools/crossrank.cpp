// crossrank command-line tool: synthetic data generation, ranking,
// iterative re-ranking, retrieval evaluation, convergence traces,
// attention gradient checks and loss evaluation over the embedding
// interchange format.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossrank/crossrank.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crossrank;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot write " + path.string());
  out << content;
  if (!out) fail_io("write failed for " + path.string());
}

unsigned resolve_threads(unsigned flag_value) {
  if (const char* env = std::getenv("CROSSRANK_THREADS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      fail_validation("CROSSRANK_THREADS is not a number: " +
                      std::string(env));
    }
  }
  return flag_value;
}

// ------------------------------------------------------------ configs ----

struct RerankFlags {
  std::string gallery, queries, out;
  std::string trace_out;
  std::string dump_dir;
  double beta = 0.1, gamma = 0.01, slope = 0.01;
  int k = 16, max_iters = 1000;
  std::string m = "16";
  std::string variant = "query-i";
  unsigned threads = 0;

  RerankConfig config() const {
    RerankConfig cfg;
    cfg.beta = beta;
    cfg.gamma = gamma;
    cfg.k_cut = k;
    cfg.alpha_low_slope = slope;
    cfg.max_iters = max_iters;
    if (m == "all") {
      cfg.m_limit = std::nullopt;
    } else {
      try {
        cfg.m_limit = std::stoi(m);
      } catch (const std::exception&) {
        fail_validation("--m must be an integer or \"all\", got \"" + m + "\"");
      }
    }
    if (variant == "query-i")
      cfg.alpha_arg = AlphaVariant::QueryRankOfI;
    else if (variant == "query-j")
      cfg.alpha_arg = AlphaVariant::QueryRankOfJ;
    else
      fail_validation("--alpha-variant must be query-i or query-j");
    cfg.validate();
    return cfg;
  }
};

void add_rerank_flags(CLI::App* cmd, RerankFlags& f, bool with_trace) {
  cmd->add_option("--gallery", f.gallery, "gallery manifest JSON")->required();
  cmd->add_option("--queries", f.queries, "query manifest JSON")->required();
  cmd->add_option("--beta", f.beta, "re-rank influence (0 disables)");
  cmd->add_option("--gamma", f.gamma, "gallery-rank scale");
  cmd->add_option("--k", f.k, "rank threshold of the alpha schedule");
  cmd->add_option("--alpha-slope", f.slope, "alpha slope below the threshold");
  cmd->add_option("--m", f.m, "penalty vote set size, integer or \"all\"");
  cmd->add_option("--max-iters", f.max_iters, "iteration budget");
  cmd->add_option("--alpha-variant", f.variant,
                  "alpha argument: query-i (item's own rank) or query-j "
                  "(neighbour's rank)");
  cmd->add_option("--threads", f.threads,
                  "worker threads (0 = machine parallelism); the "
                  "CROSSRANK_THREADS environment variable overrides this");
  if (with_trace)
    cmd->add_option("--trace-out", f.trace_out,
                    "per-iteration CSV of (query_id,iteration,ap_all)");
}

// ------------------------------------------------------------- loaders ----

std::map<std::string, int> class_by_id(const std::vector<Label>& labels) {
  std::map<std::string, int> m;
  for (const auto& l : labels) m[l.id] = l.class_id;
  return m;
}

struct RankingsFile {
  // per query, in file order
  std::vector<std::string> query_ids;
  std::map<std::string, std::vector<std::string>> gallery_ids;
};

RankingsFile read_rankings_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open rankings file " + path.string());
  RankingsFile rf;
  std::string line;
  if (!std::getline(in, line)) fail_format("empty rankings file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4)
      fail_format("rankings row \"" + line +
                  "\" must be query_id,rank,gallery_id,distance");
    const auto& qid = fields[0];
    auto it = rf.gallery_ids.find(qid);
    if (it == rf.gallery_ids.end()) {
      rf.query_ids.push_back(qid);
      it = rf.gallery_ids.emplace(qid, std::vector<std::string>{}).first;
    }
    it->second.push_back(fields[2]);
  }
  return rf;
}

// --------------------------------------------------------- formatting ----

std::string format_rankings(const std::vector<QueryRerankResult>& results,
                            const EmbeddingSet& gallery) {
  std::string out = "query_id,rank,gallery_id,distance\n";
  for (const auto& r : results) {
    for (std::size_t pos = 0; pos < r.state.ranking.size(); ++pos) {
      const int g = r.state.ranking[pos];
      out += r.query_id;
      out += ',';
      out += std::to_string(pos + 1);
      out += ',';
      out += gallery.labels[g].id;
      out += ',';
      out += fmt_double(r.state.distances[g]);
      out += '\n';
    }
  }
  return out;
}

double ap_of_ranking(const std::vector<int>& ranking, int query_class,
                     const EmbeddingSet& gallery, const std::string& qid) {
  const auto result = make_retrieval_result(qid, query_class, ranking, gallery);
  return average_precision(result);
}

void dump_matrices(const fs::path& dir, const std::string& tag,
                   const DistanceMatrix& d, const RankMatrix& r) {
  fs::create_directories(dir);
  std::string dist_csv;
  std::string rank_csv;
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) {
      if (j) {
        dist_csv += ',';
        rank_csv += ',';
      }
      dist_csv += fmt_double(d.at(i, j));
      rank_csv += std::to_string(r.rank_at(i, j));
    }
    dist_csv += '\n';
    rank_csv += '\n';
  }
  write_text_file(dir / (tag + "_distances.csv"), dist_csv);
  write_text_file(dir / (tag + "_ranks.csv"), rank_csv);
}

// --------------------------------------------------------- subcommands ----

int cmd_gen_synth(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) fail_io("cannot open spec " + spec_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail_format(std::string("spec is not valid JSON: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.n_classes = j.at("n_classes").get<int>();
    spec.per_class_gallery = j.at("per_class_gallery").get<int>();
    spec.per_class_queries = j.at("per_class_queries").get<int>();
    spec.dim = j.at("dim").get<int>();
    spec.intra_class_spread = j.at("intra_class_spread").get<double>();
    spec.domain_offset_scale = j.at("domain_offset_scale").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("chain")) {
      ChainSpec chain;
      chain.class_id = j["chain"].at("class_id").get<int>();
      chain.length = j["chain"].at("length").get<int>();
      chain.link_spread = j["chain"].at("link_spread").get<double>();
      spec.chain = chain;
    }
  } catch (const json::exception& e) {
    fail_format(std::string("bad spec field: ") + e.what());
  }
  const auto data = generate(spec);
  fs::create_directories(out_dir);
  save_embedding_set(data.gallery, fs::path(out_dir) / "gallery.json");
  save_embedding_set(data.queries, fs::path(out_dir) / "queries.json");
  std::cout << "gallery: " << (fs::path(out_dir) / "gallery.json").string()
            << " (" << data.gallery.count << " rows)\n"
            << "queries: " << (fs::path(out_dir) / "queries.json").string()
            << " (" << data.queries.count << " rows)\n";
  return 0;
}

int cmd_rank(const RerankFlags& f) {
  const auto gallery = load_embedding_set(f.gallery);
  const auto queries = load_embedding_set(f.queries);
  const auto qg = pairwise_distances(queries, gallery);
  const auto ranks = rank_rows(qg);

  std::string out = "query_id,rank,gallery_id,distance\n";
  for (std::size_t q = 0; q < queries.count; ++q)
    for (std::size_t pos = 0; pos < gallery.count; ++pos) {
      const int g = ranks.order_at(q, pos);
      out += queries.labels[q].id;
      out += ',';
      out += std::to_string(pos + 1);
      out += ',';
      out += gallery.labels[g].id;
      out += ',';
      out += fmt_double(qg.at(q, g));
      out += '\n';
    }
  if (!f.dump_dir.empty()) dump_matrices(f.dump_dir, "query_gallery", qg, ranks);
  write_text_file(f.out, out);
  std::cout << "ranked " << queries.count << " queries over " << gallery.count
            << " gallery items\n";
  return 0;
}

int cmd_rerank(const RerankFlags& f) {
  const auto cfg = f.config();
  const auto gallery = load_embedding_set(f.gallery);
  const auto queries = load_embedding_set(f.queries);

  TraceOptions trace_opts;
  trace_opts.record = !f.trace_out.empty();
  const auto results = rerank_gallery_against_queries(
      queries, gallery, cfg, trace_opts, resolve_threads(f.threads));

  const std::string rankings = format_rankings(results, gallery);

  std::string trace_csv;
  if (trace_opts.record) {
    trace_csv = "query_id,iteration,ap_all\n";
    for (std::size_t q = 0; q < results.size(); ++q) {
      const int qclass = queries.labels[q].class_id;
      for (const auto& snap : results[q].trace.snapshots) {
        trace_csv += results[q].query_id;
        trace_csv += ',';
        trace_csv += std::to_string(snap.iteration);
        trace_csv += ',';
        trace_csv += fmt_double(
            ap_of_ranking(snap.ranking, qclass, gallery, results[q].query_id));
        trace_csv += '\n';
      }
    }
  }

  if (!f.dump_dir.empty()) {
    const auto gg = pairwise_distances(gallery, gallery);
    dump_matrices(f.dump_dir, "gallery_gallery", gg, rank_rows(gg));
  }
  write_text_file(f.out, rankings);
  if (trace_opts.record) write_text_file(f.trace_out, trace_csv);
  std::cout << "re-ranked " << queries.count << " queries over "
            << gallery.count << " gallery items\n";
  return 0;
}

int cmd_trace(const RerankFlags& f, const std::string& out_path) {
  const auto cfg = f.config();
  const auto gallery = load_embedding_set(f.gallery);
  const auto queries = load_embedding_set(f.queries);

  TraceOptions trace_opts;
  trace_opts.record = true;
  const auto results = rerank_gallery_against_queries(
      queries, gallery, cfg, trace_opts, resolve_threads(f.threads));

  // union of snapshot iterations across queries; per query the latest
  // snapshot at or before t applies (rankings are frozen after convergence)
  std::set<int> iters;
  for (const auto& r : results)
    for (const auto& snap : r.trace.snapshots) iters.insert(snap.iteration);

  std::string csv = "iteration,map_all\n";
  for (int t : iters) {
    double acc = 0.0;
    for (std::size_t q = 0; q < results.size(); ++q) {
      const auto& snaps = results[q].trace.snapshots;
      const RerankTrace::Snapshot* use = &snaps.front();
      for (const auto& snap : snaps)
        if (snap.iteration <= t) use = &snap;
      acc += ap_of_ranking(use->ranking, queries.labels[q].class_id, gallery,
                           results[q].query_id);
    }
    csv += std::to_string(t);
    csv += ',';
    csv += fmt_double(acc / static_cast<double>(results.size()));
    csv += '\n';
  }
  write_text_file(out_path, csv);
  std::cout << "traced " << iters.size() << " iterations\n";
  return 0;
}

int cmd_eval(const std::string& rankings_path, const std::string& gallery_labels,
             const std::string& query_labels, const std::string& klist,
             const std::string& denom_flag, const std::string& out_path) {
  const auto gmap = class_by_id(read_labels_csv(gallery_labels));
  const auto qmap = class_by_id(read_labels_csv(query_labels));
  const auto rf = read_rankings_csv(rankings_path);
  if (rf.query_ids.empty()) fail_format("rankings file has no rows");

  const ApDenominator denom = denom_flag == "r"
                                  ? ApDenominator::TotalRelevant
                                  : ApDenominator::MinKR;

  std::vector<RetrievalResult> results;
  for (const auto& qid : rf.query_ids) {
    const auto qit = qmap.find(qid);
    if (qit == qmap.end())
      fail_validation("query \"" + qid + "\" missing from query labels");
    RetrievalResult r;
    r.query_id = qid;
    for (const auto& gid : rf.gallery_ids.at(qid)) {
      const auto git = gmap.find(gid);
      if (git == gmap.end())
        fail_validation("gallery id \"" + gid + "\" missing from gallery labels");
      r.ranked_gallery_ids.push_back(gid);
      r.relevance.push_back(git->second == qit->second ? 1 : 0);
    }
    r.validate();
    results.push_back(std::move(r));
  }

  std::vector<std::optional<int>> ks;
  std::stringstream ss(klist);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "all")
      ks.push_back(std::nullopt);
    else {
      try {
        ks.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        fail_validation("--k entries must be integers or \"all\": " + tok);
      }
    }
  }
  if (ks.empty()) fail_validation("--k list is empty");

  json out;
  out["mAP"] = json::object();
  out["prec"] = json::object();
  for (const auto& k : ks) {
    const std::string key = k ? std::to_string(*k) : "all";
    out["mAP"][key] = mean_average_precision(results, k, denom);
    if (k) {
      double acc = 0.0;
      for (const auto& r : results) acc += precision_at_k(r, *k);
      out["prec"][key] = acc / static_cast<double>(results.size());
    }
  }
  out["per_query"] = json::array();
  for (const auto& r : results) {
    json entry{{"query_id", r.query_id}};
    for (const auto& k : ks) {
      const std::string key = k ? std::to_string(*k) : "all";
      entry["ap_" + key] = average_precision(r, k, denom);
    }
    out["per_query"].push_back(entry);
  }
  write_text_file(out_path, out.dump(2) + "\n");
  std::cout << "mAP@" << (ks.front() ? std::to_string(*ks.front()) : "all")
            << " = " << fmt_double(out["mAP"][ks.front()
                                                ? std::to_string(*ks.front())
                                                : "all"]
                                       .get<double>())
            << " over " << results.size() << " queries\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, const std::string& softmax_flag,
                  int cases) {
  const bool use_softmax = softmax_flag != "off";
  Rng rng(seed);
  double worst = 0.0;

  for (int c = 0; c < cases; ++c) {
    const std::size_t na = 2 + static_cast<std::size_t>(rng.uniform() * 2);
    const std::size_t nb = 2 + static_cast<std::size_t>(rng.uniform() * 2);
    const std::size_t din = 2 + static_cast<std::size_t>(rng.uniform() * 3);
    const std::size_t dk = 1 + static_cast<std::size_t>(rng.uniform() * 3);

    auto rand_matrix = [&](std::size_t r, std::size_t cc) {
      Matrix m(r, cc);
      for (auto& v : m.data()) v = rng.gaussian();
      return m;
    };
    const Matrix a = rand_matrix(na, din);
    const Matrix b = rand_matrix(nb, din);
    AttentionParams p;
    p.w_q = rand_matrix(din, dk);
    p.w_k = rand_matrix(din, dk);
    p.w_v = rand_matrix(din, dk);
    p.use_softmax = use_softmax;
    const Matrix upstream = rand_matrix(na, dk);

    const auto grads = attention_backward(a, b, p, upstream);
    std::vector<const Matrix*> inputs{&a, &b, &p.w_q, &p.w_k, &p.w_v};
    std::vector<const Matrix*> analytic{&grads.d_a, &grads.d_b, &grads.d_wq,
                                        &grads.d_wk, &grads.d_wv};

    auto objective = [&](const Matrix& a2, const Matrix& b2,
                         const AttentionParams& p2) {
      const Matrix out = cross_attention(a2, b2, p2);
      double s = 0.0;
      for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
          s += upstream(i, j) * out(i, j);
      return s;
    };

    const double h = 1e-4;
    for (std::size_t which = 0; which < inputs.size(); ++which) {
      for (std::size_t idx = 0; idx < inputs[which]->data().size(); ++idx) {
        auto eval_shifted = [&](double delta) {
          Matrix a2 = a, b2 = b;
          AttentionParams p2 = p;
          Matrix* slots[] = {&a2, &b2, &p2.w_q, &p2.w_k, &p2.w_v};
          slots[which]->data()[idx] += delta;
          return objective(a2, b2, p2);
        };
        const double numeric = (eval_shifted(h) - eval_shifted(-h)) / (2 * h);
        const double analytic_v = analytic[which]->data()[idx];
        const double ref = std::max(std::abs(numeric), std::abs(analytic_v));
        if (ref < 1e-4) continue;
        worst = std::max(worst, std::abs(numeric - analytic_v) / ref);
      }
    }
  }

  const bool pass = worst < 1e-4;
  std::cout << "gradcheck softmax=" << (use_softmax ? "on" : "off")
            << " cases=" << cases << " max_rel_error=" << fmt_double(worst)
            << " -> " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

Matrix matrix_from_json(const json& node, const std::string& name) {
  if (!node.is_array() || node.empty())
    fail_format("\"" + name + "\" must be a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : node) rows.push_back(row.get<std::vector<double>>());
  return Matrix::from_rows(rows);
}

int cmd_loss_eval(const std::string& batch_path, const std::string& weights_json,
                  double margin, double temperature,
                  const std::string& distill_flag) {
  std::ifstream in(batch_path);
  if (!in) fail_io("cannot open batch " + batch_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail_format(std::string("batch is not valid JSON: ") + e.what());
  }

  DomainBatch batch;
  std::optional<CadFeatures> cad;
  try {
    batch.embeddings_a = matrix_from_json(j.at("embeddings_a"), "embeddings_a");
    batch.embeddings_b = matrix_from_json(j.at("embeddings_b"), "embeddings_b");
    batch.labels_a = j.at("labels_a").get<std::vector<int>>();
    batch.labels_b = j.at("labels_b").get<std::vector<int>>();
    if (j.contains("logits_a")) {
      batch.logits_a = matrix_from_json(j["logits_a"], "logits_a");
      batch.logits_b = matrix_from_json(j.at("logits_b"), "logits_b");
    }
    if (j.contains("cad")) {
      CadFeatures c;
      c.teacher_ba = matrix_from_json(j["cad"].at("teacher_ba"), "teacher_ba");
      c.student_aa = matrix_from_json(j["cad"].at("student_aa"), "student_aa");
      c.teacher_ab = matrix_from_json(j["cad"].at("teacher_ab"), "teacher_ab");
      c.student_bb = matrix_from_json(j["cad"].at("student_bb"), "student_bb");
      cad = std::move(c);
    }
  } catch (const json::exception& e) {
    fail_format(std::string("bad batch field: ") + e.what());
  }

  LossWeights weights;
  weights.margin = margin;
  weights.temperature = temperature;
  try {
    const json w = json::parse(weights_json);
    weights.lambda_triplet = w.value("triplet", 1.0);
    weights.lambda_cad = w.value("cad", 1.0);
    weights.lambda_ce = w.value("ce", 1.0);
  } catch (const json::exception& e) {
    fail_format(std::string("--weights is not valid JSON: ") + e.what());
  }

  const DistillKind kind = distill_flag == "mse"
                               ? DistillKind::MeanSquaredError
                               : DistillKind::KlDivergence;
  const auto breakdown = total_loss(batch, cad, weights, kind);
  json out{{"triplet", breakdown.triplet},
           {"cad", breakdown.cad},
           {"ce", breakdown.ce},
           {"total", breakdown.total}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-shot cross-domain retrieval: ranking, iterative "
               "re-ranking and evaluation over embedding files"};
  app.require_subcommand(1);

  // gen-synth
  std::string spec_path, out_dir;
  auto* gen = app.add_subcommand("gen-synth",
                                 "generate a synthetic two-domain scenario");
  gen->add_option("--spec", spec_path, "scenario spec JSON")->required();
  gen->add_option("--out-dir", out_dir, "output directory")->required();

  // rank
  RerankFlags rank_flags;
  auto* rank = app.add_subcommand("rank", "plain distance ranking");
  rank->add_option("--gallery", rank_flags.gallery, "gallery manifest JSON")
      ->required();
  rank->add_option("--queries", rank_flags.queries, "query manifest JSON")
      ->required();
  rank->add_option("--out", rank_flags.out, "rankings CSV")->required();
  rank->add_option("--dump-dir", rank_flags.dump_dir,
                   "debug dump of distance and rank matrices");

  // rerank
  RerankFlags rr;
  auto* rerank = app.add_subcommand("rerank", "iterative test-time re-ranking");
  add_rerank_flags(rerank, rr, true);
  rerank->add_option("--out", rr.out, "rankings CSV")->required();
  rerank->add_option("--dump-dir", rr.dump_dir,
                     "debug dump of gallery-gallery matrices");

  // trace
  RerankFlags tr;
  std::string trace_out_path;
  auto* trace = app.add_subcommand(
      "trace", "per-iteration mAP@all convergence curve of re-ranking");
  add_rerank_flags(trace, tr, false);
  trace->add_option("--out", trace_out_path, "trace CSV (iteration,map_all)")
      ->required();

  // eval
  std::string rankings_path, gallery_labels, query_labels, klist = "all",
              denom = "min-k-r", metrics_out;
  auto* eval = app.add_subcommand("eval", "retrieval metrics from rankings");
  eval->add_option("--rankings", rankings_path, "rankings CSV")->required();
  eval->add_option("--gallery-labels", gallery_labels, "gallery labels CSV")
      ->required();
  eval->add_option("--query-labels", query_labels, "query labels CSV")
      ->required();
  eval->add_option("--k", klist, "comma list of cutoffs, e.g. all,100,200");
  eval->add_option("--ap-denominator", denom,
                   "AP@k denominator: min-k-r or r");
  eval->add_option("--out", metrics_out, "metrics JSON")->required();

  // gradcheck
  std::uint64_t gc_seed = 1;
  std::string gc_softmax = "on";
  int gc_cases = 20;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "attention backward vs central finite differences");
  gradcheck->add_option("--seed", gc_seed, "rng seed");
  gradcheck->add_option("--softmax", gc_softmax, "on or off");
  gradcheck->add_option("--cases", gc_cases, "number of random cases");

  // loss-eval
  std::string batch_path, weights_json = R"({"triplet":1,"cad":1,"ce":1})",
              distill = "kl";
  double margin = 0.3, temperature = 1.0;
  auto* loss = app.add_subcommand("loss-eval",
                                  "training-loss breakdown over a batch file");
  loss->add_option("--batch", batch_path, "batch JSON")->required();
  loss->add_option("--weights", weights_json, "loss weights JSON");
  loss->add_option("--margin", margin, "triplet margin");
  loss->add_option("--temperature", temperature, "distillation temperature");
  loss->add_option("--distill", distill, "distillation form: kl or mse");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(spec_path, out_dir);
    if (rank->parsed()) return cmd_rank(rank_flags);
    if (rerank->parsed()) return cmd_rerank(rr);
    if (trace->parsed()) return cmd_trace(tr, trace_out_path);
    if (eval->parsed())
      return cmd_eval(rankings_path, gallery_labels, query_labels, klist,
                      denom, metrics_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, gc_softmax, gc_cases);
    if (loss->parsed())
      return cmd_loss_eval(batch_path, weights_json, margin, temperature,
                           distill);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
