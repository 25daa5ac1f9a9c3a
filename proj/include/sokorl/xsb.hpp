#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sokorl/level.hpp"

namespace sokorl {

// XSB cell characters: # wall, @ player, + player-on-target, $ box,
// * box-on-target, . target, space floor.
inline Level parse_xsb(const std::string &text, const std::string &id = "") {
    std::vector<std::string> rows;
    {
        std::string line;
        std::istringstream in(text);
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            rows.push_back(line);
        }
    }
    while (!rows.empty() && rows.back().find_first_not_of(' ') == std::string::npos) rows.pop_back();
    if (rows.empty()) throw ValidationError("empty level text");

    Level level;
    level.id = id;
    level.height = static_cast<int>(rows.size());
    level.width = 0;
    for (const auto &r : rows) level.width = std::max(level.width, static_cast<int>(r.size()));
    level.wall.assign(static_cast<size_t>(level.height) * level.width, 0);
    level.target.assign(static_cast<size_t>(level.height) * level.width, 0);

    int players = 0;
    for (int r = 0; r < level.height; ++r) {
        for (int c = 0; c < level.width; ++c) {
            const char ch = c < static_cast<int>(rows[r].size()) ? rows[r][c] : ' ';
            const Pos p{r, c};
            switch (ch) {
                case '#': level.wall[level.index(p)] = 1; break;
                case ' ': break;
                case '.': level.target[level.index(p)] = 1; break;
                case '$': level.initial_boxes.push_back(p); break;
                case '*':
                    level.initial_boxes.push_back(p);
                    level.target[level.index(p)] = 1;
                    break;
                case '@':
                    level.initial_player = p;
                    ++players;
                    break;
                case '+':
                    level.initial_player = p;
                    level.target[level.index(p)] = 1;
                    ++players;
                    break;
                default: throw ParseError(std::string("unknown character '") + ch + "'", r + 1, c + 1);
            }
        }
    }
    if (players == 0) throw ValidationError("level has no player");
    if (players > 1) throw ValidationError("level has multiple players");
    std::sort(level.initial_boxes.begin(), level.initial_boxes.end());
    validate(level);
    return level;
}

// Canonical form: trailing spaces stripped, LF line endings, trailing newline.
inline std::string serialize_xsb(const Level &level) {
    validate(level);
    std::string out;
    for (int r = 0; r < level.height; ++r) {
        std::string row;
        for (int c = 0; c < level.width; ++c) {
            const Pos p{r, c};
            char ch = ' ';
            if (level.is_wall(p))
                ch = '#';
            else if (p == level.initial_player)
                ch = level.is_target(p) ? '+' : '@';
            else if (std::binary_search(level.initial_boxes.begin(), level.initial_boxes.end(), p))
                ch = level.is_target(p) ? '*' : '$';
            else if (level.is_target(p))
                ch = '.';
            row.push_back(ch);
        }
        while (!row.empty() && row.back() == ' ') row.pop_back();
        out += row;
        out += '\n';
    }
    return out;
}

// Multiple levels in one text, separated by blank lines.
inline std::vector<Level> parse_xsb_collection(const std::string &text, const std::string &id_prefix = "") {
    std::vector<Level> levels;
    std::string chunk;
    int line_no = 0;
    int chunk_start = 1;
    auto flush = [&]() {
        if (chunk.find_first_not_of(" \n\r") == std::string::npos) {
            chunk.clear();
            return;
        }
        const std::string id = id_prefix + "#" + std::to_string(levels.size());
        try {
            levels.push_back(parse_xsb(chunk, id));
        } catch (const ParseError &e) {
            throw ParseError("in level starting at line " + std::to_string(chunk_start) + ": " + e.what(),
                             chunk_start + e.line - 1, e.column);
        }
        chunk.clear();
    };
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(' ') == std::string::npos) {
            flush();
            chunk_start = line_no + 1;
        } else {
            if (chunk.empty()) chunk_start = line_no;
            chunk += line;
            chunk += '\n';
        }
    }
    flush();
    return levels;
}

struct LevelSet {
    std::vector<Level> levels;
    int n_boxes = 0;
    std::string source;
};

inline LevelSet make_level_set(std::vector<Level> levels, const std::string &source) {
    if (levels.empty()) throw ValidationError("level set is empty");
    LevelSet set;
    set.n_boxes = levels.front().n_boxes();
    for (const auto &l : levels) {
        if (l.n_boxes() != set.n_boxes)
            throw ValidationError("level " + l.id + " has " + std::to_string(l.n_boxes()) +
                                  " boxes, expected " + std::to_string(set.n_boxes));
    }
    set.levels = std::move(levels);
    set.source = source;
    return set;
}

inline std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Manifest: '#' comments, one "n_boxes = K" line, then one XSB path per line
// (relative paths resolved against the manifest's directory).
inline LevelSet load_level_set(const std::string &path) {
    const std::string text = read_text_file(path);
    if (path.size() > 4 && path.substr(path.size() - 4) == ".xsb")
        return make_level_set(parse_xsb_collection(text, path), path);

    std::string dir;
    if (const auto slash = path.find_last_of('/'); slash != std::string::npos) dir = path.substr(0, slash + 1);
    std::vector<Level> levels;
    int n_boxes = -1;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        if (line.find("n_boxes") != std::string::npos && line.find('=') != std::string::npos) {
            n_boxes = std::stoi(line.substr(line.find('=') + 1));
            continue;
        }
        std::string file = line.substr(first);
        while (!file.empty() && (file.back() == ' ' || file.back() == '\t')) file.pop_back();
        const std::string full = (!file.empty() && file[0] == '/') ? file : dir + file;
        for (auto &l : parse_xsb_collection(read_text_file(full), file)) levels.push_back(std::move(l));
    }
    LevelSet set = make_level_set(std::move(levels), path);
    if (n_boxes >= 0 && n_boxes != set.n_boxes)
        throw ValidationError("manifest declares n_boxes = " + std::to_string(n_boxes) + " but levels have " +
                              std::to_string(set.n_boxes));
    return set;
}

}    // namespace sokorl
