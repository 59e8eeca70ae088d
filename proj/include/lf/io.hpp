#pragma once

#include <json.hpp>
#include <string>

#include "lf/matcore.hpp"
#include "lf/measure.hpp"
#include "lf/models.hpp"
#include "lf/stages.hpp"
#include "lf/staircase.hpp"
#include "lf/synth.hpp"

namespace lf {

using Json = nlohmann::ordered_json;

/// Parse with line:column in the error message (parse_error).
Json parse_json(const std::string& text, const std::string& source = "<input>");
Json read_json(const std::string& path);
/// Two-space indent (one line when compact), trailing newline.
std::string dump_json(const Json& j, bool compact = false);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Non-finite values become the strings "inf", "-inf", "nan".
Json num(double x);
double get_num(const Json& j, const std::string& what);

Json to_json(const Mat& m);
Mat mat_from_json(const Json& j, const std::string& what = "matrix");
/// "diag(a,b,...)", inline matrix JSON, or a path to a matrix JSON file.
Mat parse_matrix_arg(const std::string& s);

Json to_json(const Weight& w);
Weight weight_from_json(const Json& j, const std::string& what = "weight");

Json to_json(const Certificate& c);
Certificate cert_from_json(const Json& j);
Json to_json(const Measure& nu);
Measure measure_from_json(const Json& j);

Json to_json(const Domain& d);
Domain domain_from_json(const Json& j);
Json to_json(const PiecewiseAffineMap& map);
PiecewiseAffineMap map_from_json(const Json& j);

Json to_json(const TailReport& r);
Json to_json(const TwoSided& r);
Json to_json(const LaminateReport& r);
Json to_json(const HypothesisReport& r);
Json to_json(const MapReport& r);
Json to_json(const ReduceReport& r);
Json to_json(const PipelineReport& r);
Json to_json(const ApproxReport& r);
Json to_json(const AfsReport& r);
Json to_json(const PlapReport& r);
Json to_json(const DualityReport& r);
Json to_json(const GradientDistribution& d);

}  // namespace lf
