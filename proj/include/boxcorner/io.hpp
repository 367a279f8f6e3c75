#pragma once

#include <memory>
#include <string>

#include "json.hpp"

#include "boxcorner/corners.hpp"
#include "boxcorner/increment.hpp"
#include "boxcorner/oracle.hpp"
#include "boxcorner/pipeline.hpp"
#include "boxcorner/systems.hpp"
#include "boxcorner/uniformize.hpp"

namespace bc::io {

using Json = nlohmann::ordered_json;

// A set of points of H^arity. Text form: a header line "p n arity", then one
// point per line as arity element codes (base p digits, coordinate 0 lowest).
// '#' starts a comment. JSON form: {"space": "p^n", "arity": k, "points": [[..], ..]}.
struct SetData {
  int p = 2, n = 1, arity = 3;
  Bits A;
  std::size_t index(const std::vector<int>& pt) const;
  int N() const;
};
SetData parse_set(const std::string& text);
SetData read_set(const std::string& path);
std::string format_set(const SetData& s);
Json set_to_json(const SetData& s);

std::shared_ptr<const Cube> make_cube(int p, int n);

// {"space": "p^n", "S": {"1": [..], ..}, "R": {"12": [[a,b], ..], ..},
//  "T": [[a,b,c], ..], "A": [[a,b,c], ..]}. Missing S_i are all of H, missing
// R_jk are S_j x S_k, a missing T is derived, a missing A is empty.
CornerSystem system_from_json(const Json& j);
CornerSystem read_system(const std::string& path);
Json system_to_json(const CornerSystem& cs);

// unknown keys are rejected
PipelineConfig config_from_json(const Json& j);
PipelineConfig read_config(const std::string& path);
Json config_to_json(const PipelineConfig& c);

Json read_json(const std::string& path);
std::string read_text(const std::string& path);

Json to_json(const oracle::Exact& e);
Json to_json(const CornerWitness& w);
Json to_json(const Decision& d);
Json to_json(const AdmissReport& r);
Json to_json(const Densities& d);
Json to_json(const BpzResult& r);
Json to_json(const IncrementResult& r);
Json to_json(const DensityIncrement& r);
Json to_json(const UniformizeReport& r);
Json to_json(const UniLemmaResult& r);
Json to_json(const oracle::MaxCornerFree& r);
Json to_json(const oracle::RandomSetStats& r);
Json to_json(const IterationRecord& r);
Json to_json(const PipelineTrace& t);

PipelineTrace trace_from_json(const Json& j);
// one row per iteration
std::string trace_csv(const PipelineTrace& t);

}  // namespace bc::io
