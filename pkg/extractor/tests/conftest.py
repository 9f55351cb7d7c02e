import textwrap
from pathlib import Path

import pytest

NS = 'xmlns="http://framenet.icsi.berkeley.edu"'

GIVING_FRAME = f"""<?xml version="1.0" encoding="UTF-8"?>
<frame {NS} name="Giving" ID="139">
  <FE coreType="Core" name="Donor" ID="1"/>
  <FE coreType="Core" name="Theme" ID="2"/>
  <FE coreType="Core" name="Recipient" ID="3"/>
  <FE coreType="Peripheral" name="Time" ID="4"/>
</frame>
"""

PLACING_FRAME = f"""<?xml version="1.0" encoding="UTF-8"?>
<frame {NS} name="Placing" ID="140">
  <FE coreType="Core" name="Agent" ID="5"/>
  <FE coreType="Core" name="Theme" ID="6"/>
  <FE coreType="Core" name="Goal" ID="7"/>
</frame>
"""


def lu_xml(lu_id, name, pos, frame, sentences):
    body = "\n".join(sentences)
    return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<lexUnit {NS} ID="{lu_id}" name="{name}" POS="{pos}" frame="{frame}">\n'
            f'<subCorpus name="manual">\n{body}\n</subCorpus>\n</lexUnit>\n')


def sentence_xml(sent_id, text, target, fes, extra_layers=""):
    """target and fes are (start, end_inclusive, name) triples on `text`."""
    fe_labels = "\n".join(
        f'      <label start="{s}" end="{e}" name="{n}"/>' for s, e, n in fes
    )
    return textwrap.dedent(f"""\
      <sentence ID="{sent_id}">
        <text>{text}</text>
        <annotationSet ID="{sent_id}00" status="MANUAL">
          <layer name="Target" rank="1">
            <label start="{target[0]}" end="{target[1]}" name="Target"/>
          </layer>
          <layer name="FE" rank="1">
    {fe_labels}
    {extra_layers}
          </layer>
        </annotationSet>
      </sentence>""")


@pytest.fixture(scope="session")
def mini_framenet(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("fndata")
    (root / "frame").mkdir()
    (root / "lu").mkdir()
    (root / "frame" / "Giving.xml").write_text(GIVING_FRAME)
    (root / "frame" / "Placing.xml").write_text(PLACING_FRAME)

    # "I will now donate the money to charity ."
    #  0123456789...
    t1 = "I will now donate the money to charity."
    s1 = sentence_xml(
        101, t1, (11, 16),
        [(0, 0, "Donor"), (18, 26, "Theme"), (28, 37, "Recipient")],
    )
    # "Your gift gives children hope tomorrow." with a non-core Time span
    t2 = "Your gift gives children hope tomorrow."
    s2 = sentence_xml(
        102, t2, (10, 14),
        [(0, 8, "Donor"), (16, 23, "Recipient"), (25, 28, "Theme"),
         (30, 38, "Time")],
    )
    # Null-instantiated Recipient (itype, no offsets) plus a span sitting in
    # whitespace only, which cannot align to any token.
    t3 = "The money was donated yesterday."
    s3 = textwrap.dedent(f"""\
      <sentence ID="103">
        <text>{t3}</text>
        <annotationSet ID="10300" status="MANUAL">
          <layer name="Target" rank="1">
            <label start="14" end="20" name="Target"/>
          </layer>
          <layer name="FE" rank="1">
            <label start="0" end="8" name="Theme"/>
            <label name="Recipient" itype="CNI"/>
            <label start="13" end="13" name="Donor"/>
          </layer>
        </annotationSet>
      </sentence>""")
    (root / "lu" / "lu100.xml").write_text(lu_xml(100, "donate.v", "V", "Giving", [s1, s3]))
    (root / "lu" / "lu101.xml").write_text(lu_xml(101, "give.v", "V", "Giving", [s2]))

    # discontinuous Theme: "He placed it , with care , back ."
    t4 = "He placed the old vase on the shelf."
    s4 = sentence_xml(
        201, t4, (3, 8),
        [(0, 1, "Agent"), (10, 21, "Theme"), (23, 34, "Goal")],
    )
    # Theme annotated as two ranges (discontinuous span)
    t5 = "The vase he placed there broke."
    s5 = textwrap.dedent(f"""\
      <sentence ID="202">
        <text>{t5}</text>
        <annotationSet ID="20200" status="MANUAL">
          <layer name="Target" rank="1">
            <label start="12" end="17" name="Target"/>
          </layer>
          <layer name="FE" rank="1">
            <label start="0" end="7" name="Theme"/>
            <label start="25" end="29" name="Theme"/>
            <label start="9" end="10" name="Agent"/>
            <label start="19" end="23" name="Goal"/>
          </layer>
        </annotationSet>
      </sentence>""")
    (root / "lu" / "lu200.xml").write_text(lu_xml(200, "place.v", "V", "Placing", [s4, s5]))

    # noun LU must be ignored entirely
    (root / "lu" / "lu300.xml").write_text(
        lu_xml(300, "gift.n", "N", "Giving",
               [sentence_xml(301, "The gift arrived.", (4, 7), [(0, 2, "Donor")])]))
    return root
