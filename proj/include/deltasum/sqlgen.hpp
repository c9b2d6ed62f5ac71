// SQL text emission for external databases: the grouped-subquery-join control
// queries and the SUM-over-deltas queries, in PostgreSQL and SQL Server
// flavours. Generation only — nothing here talks to a database.
#pragma once

#include <optional>
#include <string>

#include "deltasum/core.hpp"

namespace deltasum {

enum class SqlDialect { Postgres, Mssql };

struct InvalidIdentifier : Error {
    using Error::Error;
};

namespace sqldetail {

// Fixed column names for the emitted schema.
inline constexpr const char* kPkColumn = "Id";
inline constexpr const char* kClassColumn = "Category";
inline constexpr const char* kValueColumn = "DateTimeIncrement";

inline void require_identifier(const std::string& text, const char* what) {
    if (text.empty()) {
        throw InvalidIdentifier(std::string(what) + " must be non-empty");
    }
    for (char ch : text) {
        const bool ok = (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') ||
                        (ch >= '0' && ch <= '9') || ch == '_';
        if (!ok) {
            throw InvalidIdentifier(std::string(what) + " '" + text +
                                    "' may contain only letters, digits and underscores");
        }
    }
}

inline std::string quote(SqlDialect dialect, const std::string& ident) {
    if (dialect == SqlDialect::Postgres) return "\"" + ident + "\"";
    return "[" + ident + "]";
}

inline std::string placeholder(SqlDialect dialect, int index) {
    if (dialect == SqlDialect::Postgres) return "$" + std::to_string(index);
    return "@p" + std::to_string(index);
}

// Wraps a microsecond-sum expression in the dialect's epoch-to-timestamp
// conversion.
inline std::string epoch_to_timestamp(SqlDialect dialect, const std::string& expr) {
    if (dialect == SqlDialect::Postgres) {
        return "to_timestamp(" + expr + " / 1000000.0)";
    }
    return "DATEADD(MICROSECOND, " + expr + " % 1000000, DATEADD(SECOND, " + expr +
           " / 1000000, CAST('1970-01-01' AS datetime2)))";
}

}  // namespace sqldetail

// Latest-value selection. Control: join every row to its group's MAX on
// (class, value). Delta: SUM the stored increments, optionally grouped, and
// convert the sum back to a timestamp. The optional predicate becomes an
// equality filter on the class column.
inline std::string emit_select_sql(SqlDialect dialect, Method method, const std::string& table,
                                   const std::optional<std::string>& predicate_class) {
    using namespace sqldetail;
    require_identifier(table, "table name");
    if (predicate_class) require_identifier(*predicate_class, "class literal");

    const std::string t = quote(dialect, table);
    const std::string cls = quote(dialect, kClassColumn);
    const std::string val = quote(dialect, kValueColumn);

    if (method == Method::Control) {
        std::string sql;
        sql += "SELECT src." + quote(dialect, kPkColumn) + ", src." + cls + ", src." + val + "\n";
        sql += "FROM " + t + " AS src\n";
        sql += "INNER JOIN (\n";
        sql += "  SELECT " + cls + ", MAX(" + val + ") AS " + val + "\n";
        sql += "  FROM " + t + "\n";
        if (predicate_class) {
            sql += "  WHERE " + cls + " = '" + *predicate_class + "'\n";
        }
        sql += "  GROUP BY " + cls + "\n";
        sql += ") AS latest\n";
        sql += "  ON src." + cls + " = latest." + cls + "\n";
        sql += " AND src." + val + " = latest." + val + ";\n";
        return sql;
    }

    const std::string sum = quote(dialect, "S");
    const std::string converted =
        epoch_to_timestamp(dialect, sum) + " AS " + quote(dialect, "LatestTimestamp");
    std::string sql;
    if (predicate_class) {
        sql += "SELECT " + converted + " FROM\n";
        sql += "(\n";
        sql += "  SELECT SUM(" + val + ") AS " + sum + "\n";
        sql += "  FROM " + t + "\n";
        sql += "  WHERE " + cls + " = '" + *predicate_class + "'\n";
        sql += ") AS src;\n";
    } else {
        sql += "SELECT " + cls + ", " + converted + " FROM\n";
        sql += "(\n";
        sql += "  SELECT " + cls + ", SUM(" + val + ") AS " + sum + "\n";
        sql += "  FROM " + t + "\n";
        sql += "  GROUP BY " + cls + "\n";
        sql += ") AS src;\n";
    }
    return sql;
}

// Parameterized insertion. Control: store the value verbatim. Delta: store
// the value minus the class's current SUM of increments, with COALESCE
// covering the first row of a class.
inline std::string emit_insert_sql(SqlDialect dialect, Method method, const std::string& table) {
    using namespace sqldetail;
    require_identifier(table, "table name");

    const std::string t = quote(dialect, table);
    const std::string cls = quote(dialect, kClassColumn);
    const std::string val = quote(dialect, kValueColumn);
    const std::string p1 = placeholder(dialect, 1);
    const std::string p2 = placeholder(dialect, 2);

    std::string sql;
    sql += "INSERT INTO " + t + " (" + cls + ", " + val + ")\n";
    if (method == Method::Control) {
        sql += "VALUES (" + p1 + ", " + p2 + ");\n";
        return sql;
    }
    sql += "VALUES (" + p1 + ", " + p2 + " - COALESCE((\n";
    sql += "  SELECT SUM(" + val + ")\n";
    sql += "  FROM " + t + "\n";
    sql += "  WHERE " + cls + " = " + p1 + "\n";
    sql += "), 0));\n";
    return sql;
}

}  // namespace deltasum
