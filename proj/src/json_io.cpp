#include "apolo/json_io.hpp"

#include "apolo/errors.hpp"

namespace apolo {

void to_json(json& j, const EmotionLabel& v) { j = v.token(); }
void from_json(const json& j, EmotionLabel& v) { v = EmotionLabel(j.get<std::string>()); }

void to_json(json& j, const Prompt& v) {
  j = json{{"text", v.text},
           {"origin", std::string(to_string(v.origin))},
           {"iteration", v.iteration},
           {"step", v.step}};
}

void from_json(const json& j, Prompt& v) {
  v.text = j.at("text").get<std::string>();
  v.origin = prompt_origin_from_string(j.at("origin").get<std::string>());
  v.iteration = j.at("iteration").get<int>();
  v.step = j.at("step").get<int>();
}

void to_json(json& j, const SubGoal& v) {
  j = json{{"index", v.index},
           {"description", v.description},
           {"emo_risk", v.emo_risk},
           {"safety_risk", v.safety_risk}};
}

void from_json(const json& j, SubGoal& v) {
  v.index = j.at("index").get<int>();
  v.description = j.at("description").get<std::string>();
  v.emo_risk = j.at("emo_risk").get<double>();
  v.safety_risk = j.at("safety_risk").get<double>();
}

void to_json(json& j, const Trajectory& v) {
  j = json{{"sub_goals", v.sub_goals},
           {"likelihood_proxy", v.likelihood_proxy},
           {"risk", v.risk},
           {"cost", v.cost},
           {"utility", v.utility}};
}

void from_json(const json& j, Trajectory& v) {
  v.sub_goals = j.at("sub_goals").get<std::vector<SubGoal>>();
  v.likelihood_proxy = j.at("likelihood_proxy").get<double>();
  v.risk = j.at("risk").get<double>();
  v.cost = j.at("cost").get<double>();
  v.utility = j.at("utility").get<double>();
}

void to_json(json& j, const CriticVerdict& v) {
  j = json{{"approved", v.approved}};
  j["suggestion"] = v.suggestion ? json(*v.suggestion) : json(nullptr);
}

void from_json(const json& j, CriticVerdict& v) {
  v.approved = j.at("approved").get<bool>();
  v.suggestion.reset();
  if (j.contains("suggestion") && !j["suggestion"].is_null()) {
    v.suggestion = j["suggestion"].get<std::string>();
  }
}

void to_json(json& j, const SocraticTurn& v) {
  j = json{{"step", v.step},
           {"question", v.question},
           {"revisions", v.revisions},
           {"verdicts", v.verdicts},
           {"result_prompt", v.result_prompt},
           {"alignment", v.alignment},
           {"alignment_estimated", v.alignment_estimated}};
}

void from_json(const json& j, SocraticTurn& v) {
  v.step = j.at("step").get<int>();
  v.question = j.at("question").get<std::string>();
  v.revisions = j.at("revisions").get<int>();
  v.verdicts = j.at("verdicts").get<std::vector<CriticVerdict>>();
  v.result_prompt = j.at("result_prompt").get<Prompt>();
  v.alignment = j.at("alignment").get<double>();
  v.alignment_estimated = j.at("alignment_estimated").get<bool>();
}

void to_json(json& j, const TokenUsage& v) {
  j = json::object();
  for (Role r : kAllRoles) {
    const auto& t = v.of(r);
    j[std::string(to_string(r))] = json{
        {"prompt_tokens", t.prompt_tokens}, {"completion_tokens", t.completion_tokens}, {"calls", t.calls}};
  }
  j["total"] = v.total();
}

void from_json(const json& j, TokenUsage& v) {
  v = TokenUsage{};
  for (Role r : kAllRoles) {
    const auto key = std::string(to_string(r));
    if (!j.contains(key)) continue;
    auto& t = v.of(r);
    t.prompt_tokens = j[key].at("prompt_tokens").get<std::int64_t>();
    t.completion_tokens = j[key].at("completion_tokens").get<std::int64_t>();
    t.calls = j[key].value("calls", std::int64_t{0});
  }
}

void to_json(json& j, const RunConfig& v) {
  std::vector<std::string> ablations;
  for (auto a : v.ablations) ablations.emplace_back(to_string(a));
  j = json{{"delta", v.delta},
           {"max_iterations", v.max_iterations},
           {"num_candidates", v.num_candidates},
           {"gamma_risk", v.gamma_risk},
           {"gamma_cost", v.gamma_cost},
           {"alpha_len", v.alpha_len},
           {"alpha_call", v.alpha_call},
           {"alpha_time", v.alpha_time},
           {"temperature", v.temperature},
           {"seed", v.seed},
           {"reward_metric", std::string(to_string(v.reward_metric))},
           {"ablations", ablations},
           {"parallelism", v.parallelism},
           {"goal", v.goal},
           {"score_alignment", v.score_alignment}};
  j["eval_subset_size"] = v.eval_subset_size ? json(*v.eval_subset_size) : json(nullptr);
}

void from_json(const json& j, RunConfig& v) {
  static const std::set<std::string> known = {
      "delta",       "max_iterations", "num_candidates", "gamma_risk",    "gamma_cost",
      "alpha_len",   "alpha_call",     "alpha_time",     "temperature",   "seed",
      "reward_metric", "ablations",    "parallelism",    "goal",          "score_alignment",
      "eval_subset_size"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  try {
    auto get = [&j](const char* key, auto& out) {
      if (j.contains(key)) out = j[key].get<std::decay_t<decltype(out)>>();
    };
    get("delta", v.delta);
    get("max_iterations", v.max_iterations);
    get("num_candidates", v.num_candidates);
    get("gamma_risk", v.gamma_risk);
    get("gamma_cost", v.gamma_cost);
    get("alpha_len", v.alpha_len);
    get("alpha_call", v.alpha_call);
    get("alpha_time", v.alpha_time);
    get("temperature", v.temperature);
    get("seed", v.seed);
    get("parallelism", v.parallelism);
    get("goal", v.goal);
    get("score_alignment", v.score_alignment);
    if (j.contains("reward_metric")) {
      v.reward_metric = reward_metric_from_string(j["reward_metric"].get<std::string>());
    }
    if (j.contains("ablations")) {
      v.ablations.clear();
      for (const auto& a : j["ablations"]) v.ablations.insert(ablation_from_string(a.get<std::string>()));
    }
    if (j.contains("eval_subset_size")) {
      if (j["eval_subset_size"].is_null()) {
        v.eval_subset_size.reset();
      } else {
        v.eval_subset_size = j["eval_subset_size"].get<int>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void to_json(json& j, const MetricReport& v) {
  json counts = json::array();
  for (std::size_t i = 0; i < v.counts.labels().size(); ++i) {
    const auto& c = v.counts.counts()[i];
    counts.push_back(json{{"label", v.counts.labels()[i].token()}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}});
  }
  j = json{{"macro_f1", v.macro_f1},
           {"micro_f1", v.micro_f1},
           {"n_samples", v.n_samples},
           {"n_parse_failures", v.n_parse_failures},
           {"counts", counts}};
  j["emr"] = v.emr ? json(*v.emr) : json(nullptr);
  j["pma"] = v.pma ? json(*v.pma) : json(nullptr);
}

void from_json(const json& j, MetricReport& v) {
  v.macro_f1 = j.at("macro_f1").get<double>();
  v.micro_f1 = j.at("micro_f1").get<double>();
  v.n_samples = j.at("n_samples").get<std::int64_t>();
  v.n_parse_failures = j.at("n_parse_failures").get<std::int64_t>();
  v.emr.reset();
  v.pma.reset();
  if (!j.at("emr").is_null()) v.emr = j["emr"].get<double>();
  if (!j.at("pma").is_null()) v.pma = j["pma"].get<double>();
  std::vector<EmotionLabel> labels;
  std::vector<LabelCounts> counts;
  for (const auto& c : j.at("counts")) {
    labels.emplace_back(c.at("label").get<std::string>());
    counts.push_back({c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(),
                      c.at("fn").get<std::int64_t>()});
  }
  v.counts = ConfusionCounts(std::move(labels), std::move(counts));
}

void to_json(json& j, const FailureInfo& v) { j = json{{"kind", v.kind}, {"message", v.message}}; }

void from_json(const json& j, FailureInfo& v) {
  v.kind = j.at("kind").get<std::string>();
  v.message = j.at("message").get<std::string>();
}

}  // namespace apolo
