#include <flockadapt/config.hpp>

#include <cctype>
#include <charconv>

namespace flockadapt::config {

namespace {

class Parser
{
public:
    explicit Parser(std::string_view text)
        : text_(text)
    {
    }

    Document run()
    {
        Document doc;
        Table* current = nullptr;
        while (true) {
            skip_blank_lines();
            if (eof()) {
                break;
            }
            const int line = line_;
            if (peek() == '[') {
                current = header(doc);
            } else {
                if (current == nullptr) {
                    fail("key outside of any [section]");
                }
                const int key_col = column_;
                std::string key = bare_key();
                skip_spaces();
                expect('=');
                skip_spaces();
                Value v = value();
                if (current->entries.count(key) != 0) {
                    throw ParseError(line, key_col, "duplicate key '" + key + "'");
                }
                current->entries.emplace(std::move(key), std::move(v));
            }
            end_of_line();
        }
        return doc;
    }

private:
    Table* header(Document& doc)
    {
        const int line = line_;
        advance();
        const bool array = !eof() && peek() == '[';
        if (array) {
            advance();
        }
        skip_spaces();
        const int name_col = column_;
        std::string name = bare_key();
        skip_spaces();
        expect(']');
        if (array) {
            expect(']');
            auto& list = doc.array_tables[name];
            list.push_back(Table{{}, line});
            return &list.back();
        }
        if (doc.tables.count(name) != 0 || doc.array_tables.count(name) != 0) {
            throw ParseError(line, name_col, "section [" + name + "] defined twice");
        }
        auto& table = doc.tables[name];
        table.line = line;
        return &table;
    }

    std::string bare_key()
    {
        std::string key;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
            key.push_back(advance());
        }
        if (key.empty()) {
            fail("expected a key");
        }
        return key;
    }

    Value value()
    {
        if (eof()) {
            fail("expected a value");
        }
        Value v;
        v.line = line_;
        v.column = column_;
        const char c = peek();
        if (c == '"') {
            v.data = string();
        } else if (c == '[') {
            v.data = array();
        } else if (text_.substr(pos_, 4) == "true") {
            pos_ += 4;
            column_ += 4;
            v.data = true;
        } else if (text_.substr(pos_, 5) == "false") {
            pos_ += 5;
            column_ += 5;
            v.data = false;
        } else {
            number(v);
        }
        return v;
    }

    std::string string()
    {
        advance(); // opening quote
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') {
                fail("unterminated string");
            }
            char c = advance();
            if (c == '"') {
                return out;
            }
            if (c == '\\') {
                if (eof()) {
                    fail("unterminated escape");
                }
                const char e = advance();
                switch (e) {
                case '"':
                    out.push_back('"');
                    break;
                case '\\':
                    out.push_back('\\');
                    break;
                case 'n':
                    out.push_back('\n');
                    break;
                case 't':
                    out.push_back('\t');
                    break;
                default:
                    fail(std::string("unsupported escape \\") + e);
                }
                continue;
            }
            out.push_back(c);
        }
    }

    Array array()
    {
        advance(); // [
        Array items;
        while (true) {
            skip_whitespace_and_comments();
            if (eof()) {
                fail("unterminated array");
            }
            if (peek() == ']') {
                advance();
                return items;
            }
            items.push_back(value());
            skip_whitespace_and_comments();
            if (!eof() && peek() == ',') {
                advance();
                continue;
            }
            skip_whitespace_and_comments();
            if (eof() || peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    void number(Value& v)
    {
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                          peek() == '.')) {
            ++pos_;
        }
        std::string_view token = text_.substr(start, pos_ - start);
        if (token.empty()) {
            fail("expected a value");
        }
        std::string_view digits = token;
        if (!digits.empty() && digits.front() == '+') {
            digits.remove_prefix(1);
        }
        double parsed = 0.0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), parsed);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty() ||
            !(std::isdigit(static_cast<unsigned char>(digits.front())) || digits.front() == '-' ||
              digits.front() == '.')) {
            fail("invalid value '" + std::string(token) + "'");
        }
        v.data = parsed;
        v.integer = token.find_first_of(".eE") == std::string_view::npos;
        column_ += static_cast<int>(token.size());
    }

    void skip_spaces()
    {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) {
            advance();
        }
    }

    void skip_comment()
    {
        if (!eof() && peek() == '#') {
            while (!eof() && peek() != '\n') {
                advance();
            }
        }
    }

    void skip_whitespace_and_comments()
    {
        while (!eof()) {
            skip_spaces();
            skip_comment();
            if (!eof() && peek() == '\n') {
                advance();
                continue;
            }
            break;
        }
    }

    void skip_blank_lines()
    {
        skip_whitespace_and_comments();
    }

    void end_of_line()
    {
        skip_spaces();
        skip_comment();
        if (!eof() && peek() != '\n') {
            fail("unexpected trailing characters");
        }
    }

    void expect(char c)
    {
        if (eof() || peek() != c) {
            fail(std::string("expected '") + c + "'");
        }
        advance();
    }

    [[noreturn]] void fail(const std::string& message) const { throw ParseError(line_, column_, message); }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    char advance()
    {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

} // namespace

Document parse(std::string_view text)
{
    return Parser(text).run();
}

} // namespace flockadapt::config
