#include <string>

#include "doctest.h"

#include "eaagent/text.hpp"

using namespace eaagent;

TEST_CASE("trim strips ascii whitespace from both ends") {
    CHECK(trim("  a b  ") == "a b");
    CHECK(trim("\t\r\nx\t") == "x");
    CHECK(trim("") == "");
    CHECK(trim("   ") == "");
    CHECK(trim("no-op") == "no-op");
}

TEST_CASE("to_lower maps ascii only") {
    CHECK(to_lower("AbC-123") == "abc-123");
    CHECK(to_lower("\xC3\x89") == "\xC3\x89");  // multi-byte stays untouched
}

TEST_CASE("split_tabs keeps empty fields") {
    using fields = std::vector<std::string_view>;
    CHECK(split_tabs("a\tb\tc") == fields{"a", "b", "c"});
    CHECK(split_tabs("a\t\tc") == fields{"a", "", "c"});
    CHECK(split_tabs("\t") == fields{"", ""});
    CHECK(split_tabs("solo") == fields{"solo"});
    CHECK(split_tabs("") == fields{""});
}

TEST_CASE("percent_decode handles valid, malformed, and mixed sequences") {
    CHECK(percent_decode("a%20b") == "a b");
    CHECK(percent_decode("%C3%89") == "\xC3\x89");
    CHECK(percent_decode("100%") == "100%");          // dangling percent
    CHECK(percent_decode("%2") == "%2");              // truncated escape
    CHECK(percent_decode("%zz") == "%zz");            // non-hex digits
    CHECK(percent_decode("caf%C3%A9%") == "caf\xC3\xA9%");
    CHECK(percent_decode("") == "");
}

TEST_CASE("is_valid_utf8 accepts well-formed sequences") {
    CHECK(is_valid_utf8("plain ascii"));
    CHECK(is_valid_utf8("caf\xC3\xA9"));
    CHECK(is_valid_utf8("\xE6\x9D\xB1\xE4\xBA\xAC"));      // three-byte CJK
    CHECK(is_valid_utf8("\xF0\x9F\x98\x80"));              // four-byte emoji
    CHECK(is_valid_utf8(""));
}

TEST_CASE("is_valid_utf8 rejects malformed sequences") {
    CHECK_FALSE(is_valid_utf8("\x80"));                    // stray continuation
    CHECK_FALSE(is_valid_utf8("\xC3"));                    // truncated two-byte
    CHECK_FALSE(is_valid_utf8("\xC0\xAF"));                // overlong slash
    CHECK_FALSE(is_valid_utf8("\xE0\x80\xAF"));            // overlong three-byte
    CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));            // surrogate half
    CHECK_FALSE(is_valid_utf8("\xF4\x90\x80\x80"));        // above U+10FFFF
    CHECK_FALSE(is_valid_utf8("\xFF"));
}

TEST_CASE("format_fixed2 rounds and normalizes negative zero") {
    CHECK(format_fixed2(0.0) == "0.00");
    CHECK(format_fixed2(-0.0) == "0.00");
    CHECK(format_fixed2(-0.0001) == "0.00");
    CHECK(format_fixed2(0.855) == "0.85");  // 0.855 rounds down: the double is 0.85499...
    CHECK(format_fixed2(0.9) == "0.90");
    CHECK(format_fixed2(-1.5) == "-1.50");
    CHECK(format_fixed2(12.345) == "12.35");
}
