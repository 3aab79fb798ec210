#include <sstream>

#include "doctest.h"
#include "spar/run_file.hpp"

using namespace spar;

TEST_CASE("trec run lines")
{
    std::vector<RankedList> lists{{"q1", {{"a", 2.5}, {"b", 1.0 / 3.0}}}, {"q2", {}}};
    std::stringstream out;
    write_trec_run(out, lists, "bm25");
    CHECK(out.str() == "q1 Q0 a 1 2.500000 bm25\nq1 Q0 b 2 0.333333 bm25\n");

    auto run = read_trec_run(out);
    REQUIRE(run.count("q1") == 1);
    CHECK(run["q1"].ids() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("trec run validation")
{
    std::stringstream repeated("q Q0 a 1 1.0 t\nq Q0 a 2 0.5 t\n");
    CHECK_THROWS_AS(read_trec_run(repeated), FormatError);
    std::stringstream short_line("q Q0 a 1\n");
    CHECK_THROWS_AS(read_trec_run(short_line), FormatError);
    std::stringstream unordered("q Q0 b 2 0.5 t\nq Q0 a 1 1.0 t\n");
    CHECK(read_trec_run(unordered)["q"].ids() == std::vector<std::string>{"a", "b"});
}
