#ifndef GAM_DATASET_HPP
#define GAM_DATASET_HPP

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "gam/problems.hpp"

namespace gam {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// CSV with a header row; the column named `label` holds +1/-1, every other
/// column is a numeric feature.
inline LabeledData read_labeled_csv(std::istream& in, const std::string& source = "<stream>")
{
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(source + ": empty file");
    const auto header = detail::split_csv_line(line);
    int label_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "label") label_col = static_cast<int>(i);
    if (label_col < 0) throw ConfigError(source + ": no `label` column in header");

    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                              " fields");
        std::vector<double> row;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double v;
            try {
                std::size_t used = 0;
                v = std::stod(cells[i], &used);
                if (used != cells[i].size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw ConfigError(source + ":" + std::to_string(line_no) + ": `" + cells[i] + "` is not a number");
            }
            if (static_cast<int>(i) == label_col) {
                if (v != 1.0 && v != -1.0)
                    throw ConfigError(source + ":" + std::to_string(line_no) + ": label must be 1 or -1");
                labels.push_back(v);
            } else {
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
    }
    LabeledData d;
    d.features = Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
    d.labels = Vector(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        d.labels(static_cast<Eigen::Index>(i)) = labels[i];
    }
    return d;
}

inline LabeledData load_labeled_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return read_labeled_csv(in, path);
}

}  // namespace gam

#endif  // GAM_DATASET_HPP
