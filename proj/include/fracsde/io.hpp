#pragma once

#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace fracsde {

using Json = nlohmann::json;

/// git describe of the build.
std::string build_version();

/// 17 significant digits, round-trips every IEEE-754 double.
std::string format_double(double value);

/// JSON text with every floating-point number printed by format_double.
std::string dump_json(const Json& value, int indent = 2);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

std::vector<double> to_vector(const Eigen::VectorXd& v);
Eigen::VectorXd from_vector(const std::vector<double>& v);

}  // namespace fracsde
