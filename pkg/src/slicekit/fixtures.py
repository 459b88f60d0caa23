"""Regression fixtures: the motivating slicing examples used across tests.

Each fixture is a small Java program with a slicing criterion, the expected
slice lines, and (where relevant) the erroneous generation the constraints
must block: a hallucinated identifier replacement and an over-generated
repetition that breaks statement structure.
"""

from __future__ import annotations

from dataclasses import dataclass

from .oracle import SliceQuery


@dataclass(frozen=True)
class Fixture:
    name: str
    lang: str
    source: str
    criterion_var: str
    criterion_line: int
    expected_lines: tuple[int, ...]
    bad_generation: str | None = None  # erroneous continuation/output, if modeled

    def query(self) -> SliceQuery:
        return SliceQuery.from_source(self.source, self.lang, self.criterion_var, self.criterion_line)


# Inaccurate dependency identification: the criterion's value flows through
# lines 7/8/12 only; the in-branch reassignments on 9-10 are irrelevant.
DEP_ACCURACY = Fixture(
    name="dep_accuracy",
    lang="java",
    source="""public class Motiv {
public static int pick(int A, int B, int C) {
int acc = 0;
acc = acc + A;
int limit = acc * 2;
limit = limit - B;
int temp
if(C <= A){
temp = A;
A = C;
acc = acc + 1;
temp = B;
}
return temp + acc + limit;
}
}
""",
    criterion_var="temp",
    criterion_line=12,
    expected_lines=(7, 8, 12),
    bad_generation="7: int temp\n8: if(C <= A){\n9: temp = A;\n10: A = C;\n12: temp = B;",
)

# Hallucinated identifier replacement: "keta" is not constructible from the
# input's token set, "Codepoint" is.
HALLUCINATED_IDENT = Fixture(
    name="hallucinated_ident",
    lang="java",
    source="""public class Digits {
static long pack(long[] x, int q) {
long last = 0;
int step = q;
step = step - 1;
long acc = 0;
int cnt = 0;
acc = acc + step;
last = last + 1;
for(int i=cnt;i>=0;i--) {
if(i>0) {long y = x[i];
long Codepoint = 97+y};
acc = acc + 1;
}
last = acc;
return last;
}
}
""",
    criterion_var="Codepoint",
    criterion_line=12,
    expected_lines=(7, 10, 11, 12),
    bad_generation=(
        "7: int cnt = 0;\n10: for(int i=cnt;i>=0;i--) {\n"
        "11: if(i>0) {long y = x[i];\n12: long keta = 97+y};"
    ),
)

_REPEAT = " * 10 * y * y * y * n * ten"

# Over-generated repetition: statement structure breaks on line 6, so the
# boundary TSED drops instead of rising.
OVERGENERATION = Fixture(
    name="overgeneration",
    lang="java",
    source="""public class Coins {
static boolean check(int n, int y) {
boolean ok = false;
int one = 0, five = 0, ten = n;
try {
if (one * 1 + five * 5 + ten * 10 > y)
ok = true;
} catch (Exception e) {
ok = false;
}
return ok;
}
}
""",
    criterion_var="ten",
    criterion_line=6,
    expected_lines=(4, 5, 6),
    bad_generation=(
        "4: int one = 0, five = 0, ten = n;\n5: try {\n"
        "6: if (one * 1 + five * 5 + ten * 10 > y" + _REPEAT * 3 + " *"
    ),
)

# Terminated variant of the over-generated line: the boundary detector fires
# right at its ';', which is where the syntactic constraint prunes.
OVERGENERATION_CORRUPT_LINE = (
    "if (one * 1 + five * 5 + ten * 10 > y" + _REPEAT * 3 + " * 1);"
)

# Identical statements in different branches: position, not text, decides
# membership. The criterion's branch is the first one; the textually equal
# "ch = true;" of the second branch stays out.
DUPLICATED_STATEMENTS = Fixture(
    name="duplicated_statements",
    lang="java",
    source="""public class Pick {
static boolean step(int[] as, int l, int r) {
boolean ch = false;
int probe = as[l];
probe = probe + as[r];
if (as[l] >= as[r]) {
probe = l;
ch = true;
}
if (as[r] >= as[l]) {
probe = r;
ch = true;
}
return ch;
}
}
""",
    criterion_var="ch",
    criterion_line=8,
    expected_lines=(6, 8),
)

ALL_FIXTURES = (DEP_ACCURACY, HALLUCINATED_IDENT, OVERGENERATION, DUPLICATED_STATEMENTS)
