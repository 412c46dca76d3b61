// Recursive-descent parser for a small Java-like language, producing
// ParseTrees. Deliberately narrow: it covers the statement and expression
// forms that show up in short utility methods. Anything richer can enter the
// pipeline as tree JSON instead.
//
// Statements: block, if/else, while, for, return, break, throw, variable
// declaration (single declarator), expression statement.
// Expressions: assignment, binary operators, prefix/postfix unary operators,
// method calls, field access, array access, object/array creation,
// identifiers, int/float/string/char/boolean/null literals.
//
// Node kinds emitted: Block, IfStatement, WhileStatement, ForStatement,
// ReturnStatement, BreakStatement, ThrowStatement, VarDecl, ExprStatement,
// Assign, BinaryExpr, UnaryExpr, MethodCall, FieldAccess, ArrayAccess,
// ObjectCreation, Identifier, Literal. Operator tokens do not get nodes;
// a BinaryExpr is just [lhs, rhs].
//
// parse_source accepts either a bare statement sequence or a full method
// declaration; for a method only the body block becomes the tree (the name
// and parameter list are dropped).

#pragma once

#include <string>

#include "treecomment/tree.hpp"

namespace treecomment {

// Throws UserError as "line:col: expected ..., got '...'" on syntax errors.
ParseNode parse_source(const std::string& text);

}  // namespace treecomment
