#pragma once

#include <json.hpp>

#include "camfmc/allocate.hpp"
#include "camfmc/budget.hpp"
#include "camfmc/engine.hpp"
#include "camfmc/rates.hpp"
#include "camfmc/stats.hpp"

// JSON bindings for the wire/file formats. Rate models round-trip through
// {family, role, scale, exponent}.

namespace camfmc::rates {

void to_json(nlohmann::json& j, const RateModel& m);
void from_json(const nlohmann::json& j, RateModel& m);
void to_json(nlohmann::json& j, const FitReport& r);

}  // namespace camfmc::rates

namespace camfmc::stats {

void to_json(nlohmann::json& j, const ModelStats& s);
void from_json(const nlohmann::json& j, ModelStats& s);

}  // namespace camfmc::stats

namespace camfmc::allocate {

void to_json(nlohmann::json& j, const Allocation& a);
void to_json(nlohmann::json& j, const SelectionTable& t);

}  // namespace camfmc::allocate

namespace camfmc::budget {

void to_json(nlohmann::json& j, const TrainingStep& s);
void to_json(nlohmann::json& j, const TrainingPlan& p);

}  // namespace camfmc::budget

namespace camfmc::engine {

void to_json(nlohmann::json& j, const BudgetLedger& l);
void to_json(nlohmann::json& j, const CaMfmcReport& r);

}  // namespace camfmc::engine
