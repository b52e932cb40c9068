#include "mflqr/json_writer.hpp"

#include <cmath>
#include <cstdio>

namespace mflqr {

JsonValue JsonValue::object() {
    JsonValue v;
    v.kind_ = Kind::Object;
    return v;
}

JsonValue JsonValue::array() {
    JsonValue v;
    v.kind_ = Kind::Array;
    return v;
}

JsonValue JsonValue::number(double x) {
    JsonValue v;
    if (std::isfinite(x)) {
        v.kind_ = Kind::Number;
        v.num_ = x;
    }  // non-finite serializes as null
    return v;
}

JsonValue JsonValue::integer(long long x) {
    JsonValue v;
    v.kind_ = Kind::Integer;
    v.int_ = x;
    return v;
}

JsonValue JsonValue::boolean(bool b) {
    JsonValue v;
    v.kind_ = Kind::Bool;
    v.bool_ = b;
    return v;
}

JsonValue JsonValue::string(std::string s) {
    JsonValue v;
    v.kind_ = Kind::String;
    v.str_ = std::move(s);
    return v;
}

JsonValue JsonValue::null() { return JsonValue(); }

JsonValue JsonValue::matrix(const Matrix& M) {
    JsonValue rows = array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        JsonValue row = array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push(number(M(i, j)));
        rows.push(std::move(row));
    }
    return rows;
}

JsonValue JsonValue::vector(const Vector& v) {
    JsonValue arr = array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push(number(v[i]));
    return arr;
}

JsonValue& JsonValue::set(const std::string& key, JsonValue v) {
    require(kind_ == Kind::Object, "JsonValue::set on non-object");
    members_.emplace_back(key, std::move(v));
    return *this;
}

JsonValue& JsonValue::push(JsonValue v) {
    require(kind_ == Kind::Array, "JsonValue::push on non-array");
    elements_.push_back(std::move(v));
    return *this;
}

namespace {

void escape_into(std::string& out, const std::string& s) {
    out += '"';
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    out += '"';
}

} // namespace

void JsonValue::write(std::string& out, int indent, int depth) const {
    const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    const std::string closepad(static_cast<std::size_t>(indent) * depth, ' ');
    switch (kind_) {
        case Kind::Null: out += "null"; break;
        case Kind::Bool: out += bool_ ? "true" : "false"; break;
        case Kind::Integer: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%lld", int_);
            out += buf;
            break;
        }
        case Kind::Number: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", num_);
            out += buf;
            break;
        }
        case Kind::String: escape_into(out, str_); break;
        case Kind::Object: {
            if (members_.empty()) {
                out += "{}";
                break;
            }
            out += "{\n";
            for (std::size_t i = 0; i < members_.size(); ++i) {
                out += pad;
                escape_into(out, members_[i].first);
                out += ": ";
                members_[i].second.write(out, indent, depth + 1);
                if (i + 1 < members_.size()) out += ',';
                out += '\n';
            }
            out += closepad + "}";
            break;
        }
        case Kind::Array: {
            if (elements_.empty()) {
                out += "[]";
                break;
            }
            // Scalars render inline; nested structures one per line.
            bool scalars = true;
            for (const auto& e : elements_)
                if (e.kind_ == Kind::Object || e.kind_ == Kind::Array) scalars = false;
            if (scalars) {
                out += '[';
                for (std::size_t i = 0; i < elements_.size(); ++i) {
                    elements_[i].write(out, indent, depth);
                    if (i + 1 < elements_.size()) out += ", ";
                }
                out += ']';
            } else {
                out += "[\n";
                for (std::size_t i = 0; i < elements_.size(); ++i) {
                    out += pad;
                    elements_[i].write(out, indent, depth + 1);
                    if (i + 1 < elements_.size()) out += ',';
                    out += '\n';
                }
                out += closepad + "]";
            }
            break;
        }
    }
}

std::string JsonValue::dump(int indent) const {
    std::string out;
    write(out, indent, 0);
    out += '\n';
    return out;
}

} // namespace mflqr
