// SPDX-License-Identifier: Apache-2.0

#include "zsp/jsonl.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "zsp/error.hpp"

namespace zsp {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        Json record;
        try {
            record = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
        }
        if (!record.is_object()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": record is not an object");
        }
        fn(record, line_no);
    }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<OrderedJson>& records)
{
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    write_text(path, out);
}

void write_text(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << content;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_metric(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

} // namespace zsp
