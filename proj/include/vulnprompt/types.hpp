#pragma once

#include <stdexcept>
#include <string>

namespace vulnprompt {

enum class Language { Java, C, Cpp };

inline std::string to_string(Language lang) {
    switch (lang) {
        case Language::Java: return "java";
        case Language::C: return "c";
        case Language::Cpp: return "cpp";
    }
    return "?";
}

// Accepts the JSONL spellings "java" | "c" | "cpp".
Language language_from_string(const std::string& s);

enum class Label { Vulnerable, NonVulnerable };

inline std::string to_string(Label label) {
    return label == Label::Vulnerable ? "vul" : "non-vul";
}

Label label_from_string(const std::string& s);

class UnparseableError : public std::runtime_error {
public:
    explicit UnparseableError(const std::string& what) : std::runtime_error(what) {}
};

class MissingFeatureError : public std::runtime_error {
public:
    explicit MissingFeatureError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vulnprompt
