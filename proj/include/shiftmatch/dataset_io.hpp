#pragma once

#include "shiftmatch/estimators.hpp"
#include "shiftmatch/synthdata.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shiftmatch {

// Malformed input files and inconsistent columns. The CLI maps this to its
// data-error exit code.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Columns of the CSV dataset format: header row with x1..xd plus optional
// y, label, w in any order. Values are shortest round-trip decimals.
struct CsvTable {
    int d = 0;
    Eigen::MatrixXd x;
    std::optional<std::vector<double>> y;
    std::optional<std::vector<double>> label;
    std::optional<std::vector<int>> w;
};

CsvTable read_csv_table(std::istream& in, const std::string& origin);
CsvTable read_csv_file(const std::string& path);

void write_sample_csv(const LabeledSample& sample, std::ostream& out);
void write_sample_csv_file(const LabeledSample& sample, const std::string& path);

void write_weights_csv(const std::vector<double>& weights, std::ostream& out);

AtePanel panel_from_table(const CsvTable& table, Norm norm);

std::string format_shortest(double v);

}  // namespace shiftmatch
