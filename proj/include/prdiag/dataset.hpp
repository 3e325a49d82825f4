#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "prdiag/task.hpp"

namespace prdiag {

// Line-delimited UTF-8 records, one instance per line. read(write(x)) == x
// field-for-field. Malformed lines raise DatasetError naming the line number.
struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::size_t write_dataset(const std::vector<TaskInstance>& instances, const std::string& path);
std::vector<TaskInstance> read_dataset(const std::string& path);

// Single-record codecs, shared with the rollout log.
std::string instance_to_json_line(const TaskInstance& inst);
TaskInstance instance_from_json_line(const std::string& line);

}  // namespace prdiag
