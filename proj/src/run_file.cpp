#include "spar/run_file.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace spar {

Run make_run(std::span<const RankedList> lists)
{
    Run run;
    for (const auto& list : lists) {
        run[list.query_id] = list;
    }
    return run;
}

void write_trec_run(std::ostream& out, std::span<const RankedList> lists, std::string_view tag)
{
    char score[64];
    for (const auto& list : lists) {
        for (std::size_t r = 0; r < list.entries.size(); ++r) {
            std::snprintf(score, sizeof(score), "%.6f", list.entries[r].score);
            out << list.query_id << " Q0 " << list.entries[r].id << ' ' << (r + 1) << ' ' << score << ' ' << tag
                << '\n';
        }
    }
}

void save_trec_run(const std::filesystem::path& path, std::span<const RankedList> lists, std::string_view tag)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_trec_run(out, lists, tag);
}

Run read_trec_run(std::istream& in)
{
    struct Row {
        std::size_t rank;
        ScoredPassage entry;
    };
    std::map<std::string, std::vector<Row>> rows;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, q0, pid, tag;
        long long rank = 0;
        double score = 0.0;
        if (!(fields >> qid >> q0 >> pid >> rank >> score >> tag) || rank < 1) {
            throw FormatError("run line " + std::to_string(line_no) + ": expected '<qid> Q0 <pid> <rank> <score> <tag>'");
        }
        if (!seen.emplace(qid, pid).second) {
            throw FormatError("run line " + std::to_string(line_no) + ": passage '" + pid + "' repeated for query '" +
                              qid + "'");
        }
        rows[qid].push_back(Row{static_cast<std::size_t>(rank), ScoredPassage{pid, score}});
    }

    Run run;
    for (auto& [qid, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        RankedList ranked{qid, {}};
        ranked.entries.reserve(list.size());
        for (auto& row : list) {
            ranked.entries.push_back(std::move(row.entry));
        }
        run.emplace(qid, std::move(ranked));
    }
    return run;
}

Run load_trec_run(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return read_trec_run(in);
}

}  // namespace spar
