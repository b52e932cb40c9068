#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mflqr/common.hpp"

namespace mflqr {

// Minimal ordered JSON document builder. Keys keep insertion order and
// numbers print with %.17g, so identical inputs serialize byte-identically.
class JsonValue {
  public:
    static JsonValue object();
    static JsonValue array();
    static JsonValue number(double v);
    static JsonValue integer(long long v);
    static JsonValue boolean(bool v);
    static JsonValue string(std::string v);
    static JsonValue null();
    static JsonValue matrix(const Matrix& M);   // array of row arrays
    static JsonValue vector(const Vector& v);

    JsonValue& set(const std::string& key, JsonValue v);  // object member
    JsonValue& push(JsonValue v);                         // array element

    std::string dump(int indent = 2) const;

  private:
    enum class Kind { Object, Array, Number, Integer, Bool, String, Null };
    Kind kind_ = Kind::Null;
    double num_ = 0.0;
    long long int_ = 0;
    bool bool_ = false;
    std::string str_;
    std::vector<std::pair<std::string, JsonValue>> members_;
    std::vector<JsonValue> elements_;

    void write(std::string& out, int indent, int depth) const;
};

} // namespace mflqr
