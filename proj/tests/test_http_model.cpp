#include <doctest.h>

#include "pii/errors.hpp"
#include "pii/http_model.hpp"

using namespace pii;

namespace {

AnnotatedMessage make_request(const std::string& body) {
    AnnotatedMessage am;
    am.id = "m1";
    am.message.kind = MessageKind::request;
    am.message.method = "POST";
    am.message.path = "/v1/x";
    am.message.body = body;
    return am;
}

}  // namespace

TEST_CASE("locate_value finds direct substrings") {
    auto am = make_request("email=a@b.co");
    Annotation ann{"Email address", "a@b.co", Placement::body};
    auto hits = locate_value(am.message, ann);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0] == std::pair<std::size_t, std::size_t>{6, 12});
}

TEST_CASE("locate_value returns all non-overlapping leftmost occurrences") {
    auto am = make_request("x=1&x=1");
    Annotation ann{"L", "1", Placement::body};
    auto hits = locate_value(am.message, ann);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0] == std::pair<std::size_t, std::size_t>{2, 3});
    CHECK(hits[1] == std::pair<std::size_t, std::size_t>{6, 7});
}

TEST_CASE("placement=path on a response raises PlacementUnavailable") {
    HttpMessage resp;
    resp.kind = MessageKind::response;
    resp.status = 200;
    resp.body = "ok";
    CHECK_THROWS_AS(locate_value(resp, Annotation{"L", "x", Placement::path}),
                    PlacementUnavailable);
}

TEST_CASE("message kind invariants") {
    SUBCASE("request with status") {
        auto am = make_request("b");
        am.message.status = 200;
        CHECK_THROWS_AS(check_message_invariants(am), Error);
    }
    SUBCASE("request without method") {
        auto am = make_request("b");
        am.message.method.reset();
        CHECK_THROWS_AS(check_message_invariants(am), Error);
    }
    SUBCASE("response carries status in range") {
        AnnotatedMessage am;
        am.id = "r";
        am.message.kind = MessageKind::response;
        am.message.status = 700;
        CHECK_THROWS_AS(check_message_invariants(am), Error);
        am.message.status = 201;
        CHECK_NOTHROW(check_message_invariants(am));
    }
    SUBCASE("empty header name") {
        auto am = make_request("b");
        am.message.headers.push_back({"", "v"});
        CHECK_THROWS_AS(check_message_invariants(am), Error);
    }
    SUBCASE("duplicate annotation triples") {
        auto am = make_request("a@b.co");
        am.annotations.push_back({"Email", "a@b.co", Placement::body});
        am.annotations.push_back({"Email", "a@b.co", Placement::body});
        CHECK_THROWS_AS(check_message_invariants(am), Error);
    }
    SUBCASE("ground truth requires verbatim values") {
        auto am = make_request("name=Bob");
        am.annotations.push_back({"Name", "Alice", Placement::body});
        CHECK_THROWS_AS(check_message_invariants(am), Error);
        am.annotations[0].value = "Bob";
        CHECK_NOTHROW(check_message_invariants(am));
    }
}

TEST_CASE("serialize: minimal GET request has an empty annotations array") {
    AnnotatedMessage am;
    am.id = "g1";
    am.message.kind = MessageKind::request;
    am.message.method = "GET";
    am.message.path = "/";
    auto record = serialize_message(am);
    CHECK(record.find("\"annotations\":[]") != std::string::npos);
    CHECK(parse_message(record) == am);
}

TEST_CASE("serialize preserves annotation order") {
    auto am = make_request("a=1&b=2");
    am.annotations.push_back({"B-label", "2", Placement::body});
    am.annotations.push_back({"A-label", "1", Placement::body});
    auto round = parse_message(serialize_message(am));
    CHECK(round == am);
    REQUIRE(round.annotations.size() == 2);
    CHECK(round.annotations[0].data_type == "B-label");
}

TEST_CASE("round trip over varied messages") {
    AnnotatedMessage am;
    am.id = "resp-1";
    am.message.kind = MessageKind::response;
    am.message.status = 404;
    am.message.headers = {{"Content-Type", "application/json"}, {"X-Req", "abc"}};
    am.message.body = "{\"error\":\"missing \\u00e9\"}";
    am.provenance = Provenance::predicted;
    am.stage = "reviewer_two";
    CHECK(parse_message(serialize_message(am)) == am);
}

TEST_CASE("header placement searches joined header values") {
    auto am = make_request("b");
    am.message.headers = {{"Authorization", "Bearer tok123"}, {"X-User", "jane"}};
    Annotation ann{"Username", "jane", Placement::header};
    CHECK(value_present(am.message, ann));
    CHECK_FALSE(value_present(am.message, Annotation{"U", "bob", Placement::header}));
}
