#pragma once

// nlohmann::json conversions for the persisted domain types.

#include <json.hpp>

#include "apolo/metrics.hpp"
#include "apolo/run_state.hpp"
#include "apolo/types.hpp"

namespace apolo {

using nlohmann::json;

void to_json(json& j, const EmotionLabel& v);
void from_json(const json& j, EmotionLabel& v);

void to_json(json& j, const Prompt& v);
void from_json(const json& j, Prompt& v);

void to_json(json& j, const SubGoal& v);
void from_json(const json& j, SubGoal& v);

void to_json(json& j, const Trajectory& v);
void from_json(const json& j, Trajectory& v);

void to_json(json& j, const CriticVerdict& v);
void from_json(const json& j, CriticVerdict& v);

void to_json(json& j, const SocraticTurn& v);
void from_json(const json& j, SocraticTurn& v);

void to_json(json& j, const TokenUsage& v);
void from_json(const json& j, TokenUsage& v);

void to_json(json& j, const RunConfig& v);
/// Missing keys keep the value already in `v`, so a partial config file
/// overlays defaults.
void from_json(const json& j, RunConfig& v);

void to_json(json& j, const MetricReport& v);
void from_json(const json& j, MetricReport& v);

void to_json(json& j, const FailureInfo& v);
void from_json(const json& j, FailureInfo& v);

}  // namespace apolo
