#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "assocpipe/assoc.hpp"
#include "oracles.hpp"

using namespace assocpipe;

namespace {

// The nine exploded header columns of a single packet, used throughout as the
// canonical tiny fixture.
const std::vector<std::string> kExplodedCols = {
    "frame.time_relative|0.000000000",
    "frame.time|2017 Apr 12 07:49:36.18828 EDT",
    "ip.dst|63.237.205.194",
    "ip.len|1500",
    "ip.proto|6",
    "ip.src|133.40.77.44",
    "tcp.dstport|55428",
    "tcp.flags|0x00000010",
    "tcp.srcport|80",
};

AssociativeArray packet_exploded() {
    std::vector<std::string> rows(kExplodedCols.size(), "PacketID");
    std::vector<double> vals(kExplodedCols.size(), 1.0);
    return from_triples(rows, kExplodedCols, vals);
}

AssociativeArray packet_dense() {
    std::vector<std::string> rows, cols, vals;
    for (const auto& c : kExplodedCols) {
        auto bar = c.find('|');
        rows.push_back("PacketID");
        cols.push_back(c.substr(0, bar));
        vals.push_back(c.substr(bar + 1));
    }
    return from_triples(rows, cols, vals);
}

}  // namespace

TEST_CASE("from_triples basics") {
    auto a = from_triples(std::vector<std::string>{"p1", "p2"}, {"ip.src", "ip.src"},
                          std::vector<std::string>{"133.40.77.44", "63.237.205.194"});
    CHECK(a.nnz() == 2);
    CHECK(a.row_keys() == std::vector<std::string>{"p1", "p2"});
    CHECK(a.col_keys() == std::vector<std::string>{"ip.src"});
    CHECK(a.at("p1", "ip.src")->str() == "133.40.77.44");
    oracle::check_structure(a);

    auto e = packet_exploded();
    CHECK(e.row_keys() == std::vector<std::string>{"PacketID"});
    CHECK(e.col_keys().size() == 9);
    CHECK(e.nnz() == 9);
    // column keys come out sorted; frame.time_relative sorts before frame.time
    // once the exploded value is attached ('_' < '|')
    CHECK(e.col_key(0) == "frame.time_relative|0.000000000");
    CHECK(e.col_key(1) == "frame.time|2017 Apr 12 07:49:36.18828 EDT");

    auto dup = from_triples(std::vector<std::string>{"p1", "p1"}, {"ip.len", "ip.len"},
                            std::vector<double>{100.0, 100.0}, CollisionRule::min);
    CHECK(dup.nnz() == 1);
    CHECK(dup.at("p1", "ip.len")->num() == 100.0);

    CHECK_THROWS_AS(from_triples(std::vector<std::string>{"a"}, {"b", "c"},
                                 std::vector<double>{1.0}),
                    argument_error);
}

TEST_CASE("from_triples collision rules and zero dropping") {
    std::vector<std::string> rows{"r", "r"}, cols{"c", "c"};
    CHECK(from_triples(rows, cols, std::vector<double>{2, 3}, CollisionRule::sum)
              .at("r", "c")->num() == 5.0);
    CHECK(from_triples(rows, cols, std::vector<double>{2, 3}, CollisionRule::max)
              .at("r", "c")->num() == 3.0);
    CHECK(from_triples(rows, cols, std::vector<double>{2, 3}, CollisionRule::first)
              .at("r", "c")->num() == 2.0);
    CHECK(from_triples(rows, cols, std::vector<std::string>{"b", "a"}, CollisionRule::min)
              .at("r", "c")->str() == "a");
    // zero inputs are never stored; cancellation deletes the cell
    CHECK(from_triples({"r"}, {"c"}, std::vector<double>{0.0}).empty());
    CHECK(from_triples(rows, cols, std::vector<double>{2, -2}, CollisionRule::sum).empty());
    CHECK(from_triples({"r"}, {"c"}, std::vector<std::string>{""}).empty());
}

TEST_CASE("add") {
    auto a = from_triples(std::vector<std::string>{"r1"}, {"c1"}, std::vector<double>{2});
    auto b = from_triples(std::vector<std::string>{"r1"}, {"c1"}, std::vector<double>{3});
    CHECK(add(a, b).at("r1", "c1")->num() == 5.0);
    CHECK(add(a, AssociativeArray{}) == a);
    CHECK(add(AssociativeArray{}, a) == a);

    auto sa = from_triples(std::vector<std::string>{"r"}, {"c"},
                           std::vector<std::string>{"beta"});
    auto sb = from_triples(std::vector<std::string>{"r"}, {"c"},
                           std::vector<std::string>{"alfa"});
    CHECK(add(sa, sb).at("r", "c")->str() == "alfa");  // lexicographic min default
    CHECK(add(sa, sb, CollisionRule::max).at("r", "c")->str() == "beta");
    CHECK_THROWS_AS(add(sa, a), type_error);

    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto x = oracle::random_array(rng);
        auto y = oracle::random_array(rng);
        auto got = add(x, y);
        oracle::check_structure(got);
        CHECK(oracle::matches(got, oracle::dense_add(oracle::to_dense(x), oracle::to_dense(y))));
    }
}

TEST_CASE("subtract") {
    std::mt19937 rng(8);
    auto a = oracle::random_array(rng);
    CHECK(subtract(a, a).empty());
    CHECK(subtract(a, AssociativeArray{}) == a);

    // step-4 replacement idiom: (A - At) + At swaps in At's column values
    auto dense = packet_dense();
    auto at = from_triples(std::vector<std::string>{"PacketID"}, {"frame.time"},
                           std::vector<std::string>{"2017-04-12 07:49:36.18828"});
    auto replaced = add(subtract(dense, at), at);
    CHECK(replaced.at("PacketID", "frame.time")->str() == "2017-04-12 07:49:36.18828");
    CHECK(replaced.at("PacketID", "ip.len")->str() == "1500");
    CHECK(replaced.nnz() == dense.nnz());

    for (int trial = 0; trial < 200; ++trial) {
        auto x = oracle::random_array(rng);
        auto y = oracle::random_array(rng);
        auto got = subtract(x, y);
        oracle::check_structure(got);
        CHECK(oracle::matches(got,
                              oracle::dense_subtract(oracle::to_dense(x), oracle::to_dense(y))));
    }
}

TEST_CASE("element_mul") {
    auto a = from_triples(std::vector<std::string>{"r"}, {"c"}, std::vector<double>{2});
    auto b = from_triples(std::vector<std::string>{"r"}, {"c"}, std::vector<double>{3});
    CHECK(element_mul(a, b).at("r", "c")->num() == 6.0);
    CHECK(element_mul(a, AssociativeArray{}).empty());

    auto s = from_triples(std::vector<std::string>{"r"}, {"c"}, std::vector<std::string>{"x"});
    CHECK_THROWS_AS(element_mul(s, s), type_error);

    std::mt19937 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        auto x = oracle::random_array(rng);
        auto y = oracle::random_array(rng);
        auto got = element_mul(x, y);
        oracle::check_structure(got);
        CHECK(oracle::matches(got,
                              oracle::dense_hadamard(oracle::to_dense(x), oracle::to_dense(y))));
    }
}

TEST_CASE("matmul") {
    std::mt19937 rng(10);
    auto a = oracle::random_array(rng);

    // labeled identity on a's column keys
    std::vector<std::string> diag(a.col_keys());
    std::vector<double> ones(diag.size(), 1.0);
    auto identity = from_triples(diag, diag, ones);
    CHECK(matmul(a, identity) == a);

    // (min,+) over a 3-node path: a->b->c, shortest step counts by exhaustion
    auto step = from_triples(std::vector<std::string>{"a", "b"}, {"b", "c"},
                             std::vector<double>{1.0, 1.0});
    auto two = matmul(step, step, Semiring::min_plus());
    CHECK(two.nnz() == 1);
    CHECK(two.at("a", "c")->num() == 2.0);

    // disjoint inner keys
    auto left = from_triples(std::vector<std::string>{"r"}, {"x"}, std::vector<double>{1.0});
    auto right = from_triples(std::vector<std::string>{"y"}, {"c"}, std::vector<double>{1.0});
    CHECK(matmul(left, right).empty());

    for (int trial = 0; trial < 200; ++trial) {
        auto x = oracle::random_array(rng);
        auto y = trial % 2 ? oracle::random_array(rng) : transpose(oracle::random_array(rng));
        const Semiring& s = trial % 3 == 0 ? Semiring::min_plus() : Semiring::plus_times();
        auto got = matmul(x, y, s);
        oracle::check_structure(got);
        CHECK(oracle::matches(got,
                              oracle::dense_matmul(oracle::to_dense(x), oracle::to_dense(y), s)));
    }
}

TEST_CASE("matmul degree check against column sums") {
    auto e = packet_exploded();
    std::vector<std::string> rows(e.row_keys());
    std::vector<std::string> ones_col(rows.size(), "1");
    std::vector<double> ones(rows.size(), 1.0);
    auto ones_vec = from_triples(rows, ones_col, ones);
    auto via_matmul = matmul(transpose(e), ones_vec);
    auto via_sum = sum(e, 1);
    std::multiset<double> lhs, rhs;
    for (const auto& [rc, v] : via_matmul.entries()) lhs.insert(v.num());
    for (const auto& [rc, v] : via_sum.entries()) rhs.insert(v.num());
    CHECK(lhs == rhs);
}

TEST_CASE("kron") {
    std::mt19937 rng(11);
    auto a = oracle::random_array(rng, 5);

    auto unit = from_triples(std::vector<std::string>{"x"}, {"y"}, std::vector<double>{1.0});
    auto relabeled = kron(a, unit);
    CHECK(relabeled.nnz() == a.nnz());
    std::multiset<double> lhs, rhs;
    for (const auto& [rc, v] : a.entries()) lhs.insert(v.num());
    for (const auto& [rc, v] : relabeled.entries()) rhs.insert(v.num());
    CHECK(lhs == rhs);

    CHECK(kron(AssociativeArray{}, a).empty());

    auto dotted = from_triples(std::vector<std::string>{"a.b"}, {"c"}, std::vector<double>{1.0});
    CHECK_THROWS_AS(kron(dotted, unit), argument_error);

    for (int trial = 0; trial < 100; ++trial) {
        auto x = oracle::random_array(rng, 4, 1, 5);
        auto y = oracle::random_array(rng, 4, 1, 5);
        auto got = kron(x, y);
        oracle::check_structure(got);
        CHECK(got.nnz() == x.nnz() * y.nnz());
        CHECK(oracle::matches(
            got, oracle::dense_kron(oracle::to_dense(x), oracle::to_dense(y),
                                    Semiring::plus_times(), ".")));
    }
}

TEST_CASE("transpose") {
    auto e = packet_exploded();
    auto et = transpose(e);
    CHECK(et.row_keys().size() == 9);
    CHECK(et.col_keys() == std::vector<std::string>{"PacketID"});
    CHECK(transpose(et) == e);

    std::mt19937 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        auto x = oracle::random_array(rng);
        auto got = transpose(x);
        oracle::check_structure(got);
        CHECK(oracle::matches(got, oracle::dense_transpose(oracle::to_dense(x))));
        CHECK(transpose(got) == x);
    }
}

TEST_CASE("select") {
    auto dense = packet_dense();
    CHECK(select(dense, KeySpec::all(), KeySpec::all()) == dense);

    auto time_col = select(dense, KeySpec::all(), KeySpec::list({"frame.time"}));
    CHECK(time_col.nnz() == 1);
    CHECK(time_col.col_keys() == std::vector<std::string>{"frame.time"});

    auto e = packet_exploded();
    auto ip_cols = select(e, KeySpec::all(), KeySpec::prefix("ip."));
    CHECK(ip_cols.col_keys().size() == 4);

    CHECK(select(dense, KeySpec::list({"nope"}), KeySpec::all()).empty());

    auto ranged = select(e, KeySpec::all(), KeySpec::range("ip.", "ip.~"));
    CHECK(ranged.col_keys().size() == 4);
}

TEST_CASE("find round trips") {
    auto nothing = find(AssociativeArray{});
    CHECK(nothing.size() == 0);

    auto e = packet_exploded();
    auto t = find(e);
    REQUIRE(t.size() == 9);
    CHECK(t.rows.front() == "PacketID");
    CHECK(from_triples(t.rows, t.cols, t.vals) == e);

    std::mt19937 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        auto x = oracle::random_array(rng);
        auto t2 = find(x);
        // row-major sorted
        for (std::size_t i = 1; i < t2.size(); ++i)
            CHECK(std::make_pair(t2.rows[i - 1], t2.cols[i - 1]) <
                  std::make_pair(t2.rows[i], t2.cols[i]));
        CHECK(from_triples(t2.rows, t2.cols, t2.vals) == x);
    }
}

TEST_CASE("put_row and put_col") {
    auto e = packet_exploded();
    auto et = transpose(e);
    auto degree_like = put_col(et, {"degree"});
    CHECK(degree_like.col_keys() == std::vector<std::string>{"degree"});
    CHECK(degree_like.nnz() == 9);

    CHECK(put_row(e, {"PacketID"}) == e);

    auto renamed = put_row(e, {"0000001.f03.A.mat"});
    auto t = find(renamed);
    CHECK(t.rows.front() == "0000001.f03.A.mat");

    auto two = from_triples(std::vector<std::string>{"a", "b"}, {"c", "c"},
                            std::vector<double>{1, 2});
    // relabeling may reorder: values must follow their original rows
    auto swapped = put_row(two, {"z", "y"});  // a->z, b->y
    CHECK(swapped.at("z", "c")->num() == 1.0);
    CHECK(swapped.at("y", "c")->num() == 2.0);
    CHECK(swapped.row_keys() == std::vector<std::string>{"y", "z"});

    CHECK_THROWS_AS(put_row(two, {"x"}), argument_error);
    CHECK_THROWS_AS(put_row(two, {"x", "x"}), argument_error);
}

TEST_CASE("cat_str") {
    CHECK(cat_str({"p0001"}, ".", {"f03.A.mat"}) ==
          std::vector<std::string>{"p0001.f03.A.mat"});
    CHECK(cat_str({}, ".", {}).empty());
    CHECK(cat_str({"a", "b"}, "-", {"s"}) == std::vector<std::string>{"a-s", "b-s"});
    // loop oracle for the broadcast case
    std::vector<std::string> lhs{"x", "y", "z"};
    auto got = cat_str(lhs, "/", {"suffix"});
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(got[i] == lhs[i] + "/suffix");
    CHECK_THROWS_AS(cat_str({"a", "b", "c"}, ".", {"1", "2"}), argument_error);
}

TEST_CASE("val2col and col2val") {
    auto dense = packet_dense();
    auto e = val2col(dense, "|");
    CHECK(e == packet_exploded());
    CHECK(e.value_kind() == ValueKind::numeric);
    CHECK(e.nnz() == dense.nnz());
    CHECK(e.at("PacketID", "ip.dst|63.237.205.194")->num() == 1.0);

    CHECK(val2col(AssociativeArray{}, "|").empty());
    CHECK(col2val(val2col(dense, "|"), "|") == dense);

    auto barred = from_triples(std::vector<std::string>{"r"}, {"a|b"},
                               std::vector<std::string>{"v"});
    CHECK_THROWS_AS(val2col(barred, "|"), argument_error);

    auto twice = from_triples(std::vector<std::string>{"r"}, {"a|b|c"},
                              std::vector<double>{1.0});
    CHECK_THROWS_AS(col2val(twice, "|"), argument_error);

    auto ambiguous = from_triples(std::vector<std::string>{"r", "r"}, {"f|1", "f|2"},
                                  std::vector<double>{1.0, 1.0});
    CHECK_THROWS_AS(col2val(ambiguous, "|"), argument_error);

    std::mt19937 rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        // random string array with sep-free labels and values
        std::uniform_int_distribution<int> n(1, 20), ch(0, 25);
        std::vector<std::string> rows, cols, vals;
        int count = n(rng);
        for (int i = 0; i < count; ++i) {
            rows.push_back(std::string("r") + char('a' + ch(rng)));
            cols.push_back(std::string("c") + char('a' + ch(rng)));
            vals.push_back(std::string("v") + char('a' + ch(rng)));
        }
        auto a = from_triples(rows, cols, vals, CollisionRule::min);
        auto exploded = val2col(a, "|");
        oracle::check_structure(exploded);
        CHECK(exploded.nnz() == a.nnz());
        for (const auto& [rc, v] : exploded.entries()) CHECK(v.num() == 1.0);
        CHECK(std::set<std::string>(exploded.row_keys().begin(), exploded.row_keys().end()) ==
              std::set<std::string>(a.row_keys().begin(), a.row_keys().end()));
        CHECK(col2val(exploded, "|") == a);
    }
}

TEST_CASE("sum") {
    auto e = packet_exploded();
    auto by_col = sum(e, 1);
    CHECK(by_col.row_keys() == std::vector<std::string>{"1"});
    CHECK(by_col.col_keys().size() == 9);
    for (const auto& [rc, v] : by_col.entries()) CHECK(v.num() == 1.0);

    auto by_row = sum(e, 2);
    CHECK(by_row.col_keys() == std::vector<std::string>{"1"});
    CHECK(by_row.at("PacketID", "1")->num() == 9.0);

    CHECK(sum(AssociativeArray{}, 1).empty());
    CHECK_THROWS_AS(sum(packet_dense(), 1), type_error);
    CHECK_THROWS_AS(sum(e, 3), argument_error);

    std::mt19937 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        auto x = oracle::random_array(rng, 10, 0, 1);  // 0/1 array
        auto got = sum(x, 1);
        oracle::check_structure(got);
        CHECK(oracle::matches(got, oracle::dense_sum(oracle::to_dense(x), 1)));
        CHECK(oracle::matches(sum(x, 2), oracle::dense_sum(oracle::to_dense(x), 2)));
    }
}
